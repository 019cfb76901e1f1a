use super::*;
use crate::delay::{alpha_embedding_check, DelaySchedule, PairSource};
use crate::dynamics::tests::systems_zoo;
use crate::spaces::Space;
use proptest::prelude::*;

/// Largest separated subset by enumerating every subset.
fn brute_force_max<T: OrbitTable>(table: &T, n: usize, eps: f64) -> usize {
    let m = table.len();
    let mut best = 0;
    for mask in 0u32..(1 << m) {
        let members: Vec<usize> = (0..m).filter(|&a| mask >> a & 1 == 1).collect();
        let ok = members.iter().enumerate().all(|(i, &a)| {
            members[i + 1..]
                .iter()
                .all(|&b| (0..n).any(|j| table.step_distance(a, b, j) >= eps))
        });
        if ok {
            best = best.max(members.len());
        }
    }
    best
}

#[test]
fn identity_half_net() {
    let sys = SystemSpec::identity(Space::interval());
    let net = sys.space().epsilon_net(0.5).unwrap();
    let r = max_separated_greedy(&sys, &net, 1, 0.5).unwrap();
    assert_eq!(r.s_n_lower, 3);
    assert!(r.exact);
    let table = SourceOrbits::new(&sys, &net, 1).unwrap();
    assert_eq!(brute_force_max(&table, 1, 0.5), 3);
    assert_eq!(greedy_separated(&table, 1, 0.5).unwrap().s_n_lower, 3);
}

#[test]
fn rejects_bad_queries() {
    let sys = SystemSpec::tent();
    assert!(matches!(max_separated_greedy(&sys, &[], 1, 0.1), Err(Error::Empty(_))));
    assert!(max_separated_greedy(&sys, &[Point::real(0.1)], 0, 0.1).is_err());
    assert!(max_separated_greedy(&sys, &[Point::real(0.1)], 1, 0.0).is_err());
    assert!(max_separated_greedy(&sys, &[Point::real(1.5)], 1, 0.1).is_err());
    assert!(EntropyGrid::new(vec![0.1], vec![1, 2, 3], 0.06).is_err());
    assert!(EntropyGrid::new(vec![0.1], vec![0, 2, 3], 0.05).is_err());
    assert!(EntropyGrid::new(vec![], vec![1, 2, 3], 0.05).is_err());
}

#[test]
fn rotation_adds_no_separation() {
    let sys = SystemSpec::rotation(0.381_966_0);
    let net = sys.space().epsilon_net(0.01).unwrap();
    let table = SourceOrbits::new(&sys, &net, 20).unwrap();
    let first = greedy_separated(&table, 1, 0.1).unwrap().s_n_lower;
    assert!(first <= 10);
    for n in [2, 5, 10, 20] {
        assert_eq!(greedy_separated(&table, n, 0.1).unwrap().s_n_lower, first);
    }
    let grid = EntropyGrid::new(vec![0.2, 0.1], (1..=12).collect(), 0.01).unwrap();
    assert!(entropy_curve(&sys, &grid).unwrap().h_estimate.abs() <= 0.02);
}

#[test]
fn doubling_counts_double() {
    let sys = SystemSpec::doubling();
    let net = sys.space().epsilon_net(2f64.powi(-12)).unwrap();
    let table = SourceOrbits::new(&sys, &net, 2).unwrap();
    assert_eq!(greedy_separated(&table, 1, 0.26).unwrap().s_n_lower, 3);
    let two = greedy_separated(&table, 2, 0.26).unwrap();
    assert!((7..=8).contains(&two.s_n_lower), "{}", two.s_n_lower);
    assert!(verify_separated(&table, &two.witness, 2, 0.26));
    assert!(is_maximal(&table, &two.witness, 2, 0.26));
}

#[test]
fn identity_has_zero_entropy() {
    let sys = SystemSpec::identity(Space::interval());
    let grid = EntropyGrid::new(vec![0.1, 0.05], (1..=6).collect(), 0.025).unwrap();
    let est = entropy_curve(&sys, &grid).unwrap();
    assert!(est.h_estimate.abs() <= 0.01);
    for e in [0.1, 0.05] {
        assert!((1..=6).all(|n| est.count(n, e) == est.count(1, e)));
    }
}

#[test]
fn finite_systems_have_zero_entropy() {
    let sys = SystemSpec::finite_map(vec![1, 2, 0, 0, 4]).unwrap();
    let grid = EntropyGrid::new(vec![0.5], (1..=6).collect(), 0.25).unwrap();
    let est = entropy_curve(&sys, &grid).unwrap();
    assert_eq!(est.h_estimate, 0.0);
    assert!(est.table.iter().all(|c| c.s_n_lower == 5 && c.exact));
}

/// Distinct length-`n` tent itineraries among the candidates.
fn itinerary_count(points: &[f64], n: usize) -> usize {
    let mut seen = std::collections::HashSet::new();
    for &x0 in points {
        let mut x = x0;
        let mut word = 0u64;
        for _ in 0..n {
            word = word << 1 | u64::from(x > 0.5);
            x = if x <= 0.5 { 2.0 * x } else { 2.0 * (1.0 - x) };
        }
        seen.insert(word);
    }
    seen.len()
}

#[test]
fn tent_entropy_tracks_itinerary_growth() {
    let mesh = 2f64.powi(-12);
    let xs: Vec<f64> = (0..=4096).map(|i| i as f64 * mesh).collect();
    let ns: Vec<usize> = (3..=9).collect();
    let counts: Vec<f64> = ns.iter().map(|&n| (itinerary_count(&xs, n) as f64).ln()).collect();
    for (&n, c) in ns.iter().zip(&counts) {
        assert_eq!(c.exp().round() as usize, 1 << n);
    }
    let nx: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let oracle = least_squares(&nx, &counts).0;
    assert!((oracle - std::f64::consts::LN_2).abs() < 1e-12);

    let grid = EntropyGrid::new(vec![0.2, 0.1], ns, mesh).unwrap();
    let est = entropy_curve(&SystemSpec::tent(), &grid).unwrap();
    assert!((est.h_estimate - oracle).abs() <= 0.1, "{}", est.h_estimate);
}

#[test]
fn table_invariants_across_the_zoo() {
    for sys in systems_zoo() {
        let grid = EntropyGrid::new(vec![0.5, 0.25], vec![1, 2, 3, 4], 0.125).unwrap();
        let net = sys.space().epsilon_net(grid.mesh).unwrap();
        let table = SourceOrbits::new(&sys, &net, 4).unwrap();
        let est = estimate_entropy(&table, &grid, None).unwrap();
        for c in &est.table {
            assert!(verify_separated(&table, &c.witness, c.n, c.epsilon), "{}", sys.label());
            assert!(is_maximal(&table, &c.witness, c.n, c.epsilon), "{}", sys.label());
        }
        for e in [0.5, 0.25] {
            for n in 1..4 {
                assert!(est.count(n, e) <= est.count(n + 1, e), "{}", sys.label());
            }
        }
        for n in 1..=4 {
            assert!(est.count(n, 0.5) <= est.count(n, 0.25), "{}", sys.label());
        }
        for f in &est.fits {
            assert!(f.slope >= -1e-9, "{}", sys.label());
        }
    }
}

#[test]
fn window_metric_on_series() {
    let table = ReconstructedOrbits::from_series(1, 2, vec![vec![0.0, 0.0, 0.0], vec![0.0, 0.1, 0.5]]).unwrap();
    assert_eq!(table.step_distance(0, 1, 0), 0.1);
    assert_eq!(table.step_distance(0, 1, 1), 0.5);
    assert!(separated_pair(&table, 0, 1, 2, 0.5));
    assert!(!separated_pair(&table, 0, 1, 1, 0.5));
    assert!(ReconstructedOrbits::from_series(1, 3, vec![vec![0.0; 3]]).is_err());
}

#[test]
fn least_squares_recovers_a_line() {
    let xs = [1.0, 2.0, 3.0, 4.0];
    let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x - 2.0).collect();
    let (slope, intercept, residual) = least_squares(&xs, &ys);
    assert!((slope - 0.5).abs() < 1e-12 && (intercept + 2.0).abs() < 1e-12 && residual < 1e-12);
}

fn certificate(sys: &SystemSpec, f: &Observable, k: usize, alpha: f64, source: PairSource) -> EmbeddingCertificate {
    alpha_embedding_check(sys, f, &DelaySchedule::prefix(k), alpha, source)
        .unwrap()
        .certificate()
        .expect("embedding holds")
}

#[test]
fn equality_on_trivial_systems() {
    let id = SystemSpec::identity(Space::interval());
    let f = Observable::coordinate(id.space());
    let cert = certificate(&id, &f, 1, 0.05, PairSource::Random { pairs: 200, seed: 1 });
    let grid = EntropyGrid::new(vec![0.1], (1..=5).collect(), 0.05).unwrap();
    let report = entropy_equality_check(&id, &f, 1, &grid, 0.01, Some(&cert)).unwrap();
    assert!(report.passed);
    assert!(report.h_t.abs() <= 0.01 && report.h_sigma.abs() <= 0.01);

    let finite = SystemSpec::finite_map(vec![1, 2, 0, 0, 4]).unwrap();
    let g = Observable::coordinate(finite.space());
    let cert = certificate(&finite, &g, 0, 0.5, PairSource::Exhaustive);
    let grid = EntropyGrid::new(vec![0.5], (1..=6).collect(), 0.25).unwrap();
    let report = entropy_equality_check(&finite, &g, 0, &grid, 0.0, Some(&cert)).unwrap();
    assert_eq!((report.h_t, report.h_sigma), (0.0, 0.0));
    assert!(report.passed);

    assert!(matches!(
        entropy_equality_check(&finite, &g, 0, &grid, 0.0, None),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(
        entropy_equality_check(&finite, &g, 1, &grid, 0.0, Some(&cert)),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn doubling_entropy_survives_reconstruction() {
    let sys = SystemSpec::doubling();
    let f = Observable::coordinate(sys.space());
    let cert = certificate(&sys, &f, 2, 0.05, PairSource::Random { pairs: 500, seed: 2 });
    let grid = EntropyGrid::new(vec![0.25, 0.125], (2..=9).collect(), 2f64.powi(-12)).unwrap();
    let report = entropy_equality_check(&sys, &f, 2, &grid, 0.05, Some(&cert)).unwrap();
    assert!(report.passed, "{} vs {}", report.h_t, report.h_sigma);
    assert!((report.h_t - std::f64::consts::LN_2).abs() < 0.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_search_matches_enumeration(
        xs in prop::collection::vec(0.0f64..=1.0, 1..=10),
        n in 1usize..=4,
        eps in 0.05f64..0.6,
    ) {
        let sys = SystemSpec::tent();
        let pts: Vec<Point> = xs.iter().map(|&x| Point::real(x)).collect();
        let table = SourceOrbits::new(&sys, &pts, n).unwrap();
        let exact = exact_separated(&table, n, eps).unwrap();
        prop_assert_eq!(exact.s_n_lower, brute_force_max(&table, n, eps));
        prop_assert!(verify_separated(&table, &exact.witness, n, eps));
        let greedy = greedy_separated(&table, n, eps).unwrap();
        prop_assert!(greedy.s_n_lower <= exact.s_n_lower);
        prop_assert!(verify_separated(&table, &greedy.witness, n, eps));
        prop_assert!(is_maximal(&table, &greedy.witness, n, eps));
    }
}
