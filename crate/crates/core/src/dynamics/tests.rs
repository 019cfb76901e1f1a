use super::*;
use crate::spaces::Tree;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn approx(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

pub(crate) fn systems_zoo() -> Vec<SystemSpec> {
    let star = Tree::star(3, 1.0).unwrap();
    vec![
        SystemSpec::tent(),
        SystemSpec::new(Space::interval(), MapKind::Logistic { r: 3.9 }).unwrap(),
        SystemSpec::square(),
        SystemSpec::doubling(),
        SystemSpec::rotation(0.381_966_0),
        SystemSpec::new(Space::circle(), MapKind::NorthSouth { strength: 0.5 }).unwrap(),
        SystemSpec::new(
            Space::gasket(6),
            MapKind::GasketShift {
                refill: Refill::RepeatLast,
            },
        )
        .unwrap(),
        SystemSpec::new(
            Space::carpet(4),
            MapKind::CarpetShift {
                refill: Refill::Fixed(0),
            },
        )
        .unwrap(),
        SystemSpec::new(
            Space::cantor(10),
            MapKind::CantorShift {
                refill: Refill::RepeatLast,
            },
        )
        .unwrap(),
        SystemSpec::new(
            Space::dendrite(star),
            MapKind::DendritePl {
                arc_map: vec![1, 2, 0],
                profile: vec![[0.0, 0.0], [0.5, 1.0], [1.0, 0.0]],
            },
        )
        .unwrap(),
        SystemSpec::new(Space::interval(), MapKind::SimplexFold).unwrap(),
        SystemSpec::new(Space::triangle(), MapKind::SimplexFold).unwrap(),
        SystemSpec::finite_map(vec![1, 2, 2, 0, 3]).unwrap(),
        SystemSpec::identity(Space::interval()),
        SystemSpec::new(
            Space::interval(),
            MapKind::Constant {
                point: Point::real(0.3),
            },
        )
        .unwrap(),
    ]
}

#[test]
fn iterate_examples() {
    let tent = SystemSpec::tent();
    let x = tent.iterate(&Point::real(0.4), 2).unwrap();
    assert!(approx(x.as_real().unwrap(), 0.4, 1e-15));
    assert_eq!(tent.iterate(&Point::real(0.4), 0).unwrap(), Point::real(0.4));

    let doubling = SystemSpec::doubling();
    let x = doubling.iterate(&Point::real(0.1), 3).unwrap();
    assert!(approx(x.as_real().unwrap(), 0.8, 1e-15));

    assert!(tent.iterate(&Point::real(1.5), 1).is_err());
    assert!(tent.iterate(&Point::State(0), 1).is_err());
}

#[test]
fn gasket_shift_drops_leading_letter() {
    let sys = SystemSpec::new(
        Space::gasket(6),
        MapKind::GasketShift {
            refill: Refill::RepeatLast,
        },
    )
    .unwrap();
    let next = sys.iterate(&Point::Address(vec![0, 2, 1, 2, 0, 1]), 1).unwrap();
    assert_eq!(next, Point::Address(vec![2, 1, 2, 0, 1, 1]));
    let fixed = SystemSpec::new(
        Space::gasket(6),
        MapKind::GasketShift {
            refill: Refill::Fixed(0),
        },
    )
    .unwrap();
    let next = fixed.iterate(&Point::Address(vec![0, 2, 1, 2, 0, 1]), 1).unwrap();
    assert_eq!(next, Point::Address(vec![2, 1, 2, 0, 1, 0]));
}

#[test]
fn gasket_shift_is_semiconjugate_to_expanding_map() {
    // coords(shift(w)) = 2 coords(w) - v_{w_0}
    let space = Space::gasket(10);
    let ifs = space.ifs().unwrap().clone();
    let sys = SystemSpec::new(
        space.clone(),
        MapKind::GasketShift {
            refill: Refill::RepeatLast,
        },
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..2_000 {
        let p = space.sample(&mut rng);
        let Point::Address(w) = &p else { unreachable!() };
        let image = sys.apply(&p);
        let Point::Address(u) = &image else { unreachable!() };
        assert_eq!(&u[..w.len() - 1], &w[1..]);
        let z = ifs.coords(w);
        let v = ifs.vertex(w[0]);
        let expected = [2.0 * z[0] - v[0], 2.0 * z[1] - v[1]];
        let got = ifs.coords(u);
        assert!(approx(got[0], expected[0], 1e-12) && approx(got[1], expected[1], 1e-12));
    }
}

#[test]
fn maps_stay_in_their_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for sys in systems_zoo() {
        for _ in 0..10_000 {
            let x = sys.space().sample(&mut rng);
            let y = sys.apply(&x);
            assert!(sys.space().contains(&y), "{}: {x} -> {y}", sys.label());
        }
    }
}

#[test]
fn semigroup_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for sys in systems_zoo() {
        for _ in 0..200 {
            let x = sys.space().sample(&mut rng);
            let n = rng.gen_range(0..32);
            let m = rng.gen_range(0..32);
            let direct = sys.iterate(&x, n + m).unwrap();
            let split = sys.iterate(&sys.iterate(&x, n).unwrap(), m).unwrap();
            if sys.space().is_exact() {
                assert_eq!(direct, split, "{}", sys.label());
            } else {
                assert!(sys.space().dist(&direct, &split) <= 1e-9, "{}", sys.label());
            }
        }
    }
}

#[test]
fn simplex_fold_matches_tent_on_a_segment() {
    let fold = SystemSpec::new(Space::interval(), MapKind::SimplexFold).unwrap();
    let tent = SystemSpec::tent();
    for i in 0..=64 {
        let x = Point::real(i as f64 / 64.0);
        assert_eq!(fold.apply(&x), tent.apply(&x));
    }
}

#[test]
fn simplex_fold_is_injective_on_each_half() {
    let fold = SystemSpec::new(Space::interval(), MapKind::SimplexFold).unwrap();
    for (lo, hi) in [(0.0, 0.5), (0.5, 1.0)] {
        let values: Vec<f64> = (0..=1000)
            .map(|i| {
                fold.apply(&Point::real(lo + (hi - lo) * i as f64 / 1000.0))
                    .as_real()
                    .unwrap()
            })
            .collect();
        let increasing = values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = values.windows(2).all(|w| w[1] < w[0]);
        assert!(increasing || decreasing);
    }
}

#[test]
fn triangle_fold_sends_barycentres_to_vertices() {
    let fold = SystemSpec::new(Space::triangle(), MapKind::SimplexFold).unwrap();
    let h = 3f64.sqrt() / 2.0;
    let cases = [
        ([0.0, 0.0], [0.0, 0.0]),
        ([1.0, 0.0], [0.0, 0.0]),
        ([0.5, 0.0], [1.0, 0.0]),
        ([0.75, h / 2.0], [1.0, 0.0]),
        ([0.5, h / 3.0], [0.5, h]),
    ];
    for (input, expected) in cases {
        let Point::Real(out) = fold.apply(&Point::Real(input.to_vec())) else {
            unreachable!()
        };
        assert!(
            approx(out[0], expected[0], 1e-12) && approx(out[1], expected[1], 1e-12),
            "{input:?} -> {out:?}"
        );
    }
}

#[test]
fn rejects_bad_combinations() {
    assert!(SystemSpec::new(Space::circle(), MapKind::Tent).is_err());
    assert!(SystemSpec::new(Space::interval(), MapKind::Logistic { r: 4.5 }).is_err());
    assert!(SystemSpec::new(
        Space::gasket(4),
        MapKind::CarpetShift {
            refill: Refill::RepeatLast
        }
    )
    .is_err());
    assert!(SystemSpec::finite_map(vec![0, 3, 1]).is_err());
    assert!(SystemSpec::new(Space::finite(2), MapKind::FiniteMap { table: vec![0] }).is_err());
}

#[test]
fn periodic_point_examples() {
    let doubling = SystemSpec::doubling();
    let pts = periodic_points(&doubling, 2, 1e-3).unwrap();
    // oracle: 2x = x mod 1 gives 0; 4x = x mod 1 gives k/3
    let expected = [(0.0, 1), (1.0 / 3.0, 2), (2.0 / 3.0, 2)];
    assert_eq!(pts.len(), expected.len(), "{pts:?}");
    for (p, (x, period)) in pts.iter().zip(expected) {
        assert!(approx(p.point.as_real().unwrap(), x, 1e-9));
        assert_eq!(p.period, period);
    }

    // on [0, 1] the jump at 1/2 is not a fixed point, and 1 is
    let unit = SystemSpec::new(Space::interval(), MapKind::Doubling).unwrap();
    let pts = periodic_points(&unit, 2, 1e-3).unwrap();
    let xs: Vec<f64> = pts.iter().map(|p| p.point.as_real().unwrap()).collect();
    assert_eq!(xs.len(), 4, "{xs:?}");
    for (x, want) in xs.iter().zip([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]) {
        assert!(approx(*x, want, 1e-9));
    }

    let tent = SystemSpec::tent();
    let pts = periodic_points(&tent, 1, 1e-3).unwrap();
    // oracle: 2x = x and 2(1-x) = x
    assert_eq!(pts.len(), 2);
    assert!(approx(pts[0].point.as_real().unwrap(), 0.0, 1e-12));
    assert!(approx(pts[1].point.as_real().unwrap(), 2.0 / 3.0, 1e-9));

    let identity = SystemSpec::identity(Space::interval());
    let grid = Space::interval().grid(0.125).unwrap();
    let pts = periodic_points(&identity, 1, 0.125).unwrap();
    for cell in grid.cells() {
        assert!(pts
            .iter()
            .any(|p| identity.space().dist(&p.point, &cell.rep) <= cell.radius));
    }
}

#[test]
fn tent_periodic_points_match_analytic_count() {
    // Fix(T^p) has 2^p points; Möbius inversion gives the least-period counts
    fn mobius(n: usize) -> i64 {
        let (mut n, mut sign, mut p) = (n, 1, 2);
        while p * p <= n {
            if n % p == 0 {
                n /= p;
                if n % p == 0 {
                    return 0;
                }
                sign = -sign;
            }
            p += 1;
        }
        if n > 1 {
            -sign
        } else {
            sign
        }
    }
    let least = |p: usize| -> usize {
        (1..=p)
            .filter(|d| p.is_multiple_of(*d))
            .map(|d| mobius(p / d) * (1i64 << d))
            .sum::<i64>() as usize
    };
    let tent = SystemSpec::tent();
    for n in 1..=5 {
        let pts = periodic_points(&tent, n, 1e-3).unwrap();
        for p in 1..=n {
            let got = pts.iter().filter(|q| q.period == p).count();
            assert_eq!(got, least(p), "n = {n}, period {p}");
        }
        assert_eq!(pts.len(), (1..=n).map(least).sum::<usize>());
    }
}

#[test]
fn periodic_points_on_exact_tiers() {
    let sys = SystemSpec::finite_map(vec![1, 0, 2, 2]).unwrap();
    let pts = periodic_points(&sys, 2, 1.0).unwrap();
    let got: Vec<(usize, usize)> = pts.iter().map(|p| (p.point.as_state().unwrap(), p.period)).collect();
    assert_eq!(got, vec![(0, 2), (1, 2), (2, 1)]);

    let gasket = SystemSpec::new(
        Space::gasket(5),
        MapKind::GasketShift {
            refill: Refill::RepeatLast,
        },
    )
    .unwrap();
    let pts = periodic_points(&gasket, 3, 1.0).unwrap();
    assert_eq!(pts.len(), 3);
    assert!(pts.iter().all(|p| p.period == 1));

    let dendrite = SystemSpec::identity(Space::dendrite(Tree::star(3, 1.0).unwrap()));
    assert!(matches!(periodic_points(&dendrite, 1, 0.1), Err(Error::Unsupported(_))));
    assert!(periodic_points(&SystemSpec::tent(), 0, 0.1).is_err());
}

#[test]
fn trajectory_separation_examples() {
    let tent = SystemSpec::tent();
    let v = is_trajectory_separated(&tent, &Point::real(0.3), &Point::real(0.7), 10, 0.01).unwrap();
    assert_eq!(v, SeparationVerdict::MergedAt { index: 1 });

    let doubling = SystemSpec::doubling();
    let v = is_trajectory_separated(&doubling, &Point::real(0.1), &Point::real(0.3), 20, 0.05).unwrap();
    assert!(v.is_separated(), "{v:?}");

    let identity = SystemSpec::identity(Space::interval());
    let v = is_trajectory_separated(&identity, &Point::real(0.4), &Point::real(0.4), 5, 0.1).unwrap();
    assert_eq!(v, SeparationVerdict::MergedAt { index: 0 });

    let v = is_trajectory_separated(&identity, &Point::real(0.4), &Point::real(0.45), 5, 0.1).unwrap();
    assert!(matches!(v, SeparationVerdict::Undetermined { .. }));

    assert!(is_trajectory_separated(&tent, &Point::real(0.3), &Point::real(0.7), 10, 0.0).is_err());
}

#[test]
fn eventual_classes_examples() {
    let chain = SystemSpec::finite_map(vec![1, 2, 2]).unwrap();
    assert_eq!(eventual_orbit_classes(&chain).unwrap(), vec![vec![0, 1, 2]]);

    let identity = SystemSpec::finite_map(vec![0, 1, 2]).unwrap();
    assert_eq!(
        eventual_orbit_classes(&identity).unwrap(),
        vec![vec![0], vec![1], vec![2]]
    );

    let swap = SystemSpec::finite_map(vec![1, 0, 2]).unwrap();
    assert_eq!(eventual_orbit_classes(&swap).unwrap(), vec![vec![0], vec![1], vec![2]]);
    // brute force: the orbits of a and b never agree at equal times
    for t in 0..=3 {
        let a = swap.iterate(&Point::State(0), t).unwrap();
        let b = swap.iterate(&Point::State(1), t).unwrap();
        assert_ne!(a, b);
    }

    assert!(matches!(
        eventual_orbit_classes(&SystemSpec::tent()),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn doubly_zero_dimensional_on_finite_systems() {
    for table in [vec![1, 2, 2], vec![0, 0, 0], vec![1, 2, 3, 4, 0]] {
        assert!(is_doubly_zero_dimensional_finite(&SystemSpec::finite_map(table).unwrap()).unwrap());
    }
    assert!(is_doubly_zero_dimensional_finite(&SystemSpec::tent()).is_err());
}

#[test]
fn lipschitz_bounds_are_plausible() {
    assert!(approx(SystemSpec::tent().sampled_expansion(2048, 1), 2.0, 1e-6));
    assert!(approx(SystemSpec::doubling().sampled_expansion(2048, 1), 2.0, 1e-6));
    assert!(SystemSpec::square().lipschitz_bound() >= 2.9);
    let rot = SystemSpec::rotation(0.25).sampled_expansion(2048, 1);
    assert!(approx(rot, 1.0, 1e-6));
}
