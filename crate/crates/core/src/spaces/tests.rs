use super::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn zoo() -> Vec<Space> {
    vec![
        Space::interval(),
        Space::circle(),
        Space::triangle(),
        Space::cantor(10),
        Space::gasket(8),
        Space::carpet(6),
        Space::dendrite(Tree::star(3, 1.0).unwrap()),
        Space::finite(4),
    ]
}

#[test]
fn metric_examples() {
    let interval = Space::interval();
    let d = interval.metric(&Point::real(0.2), &Point::real(0.7)).unwrap();
    assert!((d - 0.5).abs() < 1e-15);

    let circle = Space::circle();
    let d = circle.metric(&Point::real(0.1), &Point::real(0.9)).unwrap();
    assert!((d - 0.2).abs() < 1e-15);

    let gasket = Space::gasket(8);
    let d = gasket
        .metric(&Point::Address(vec![0; 8]), &Point::Address(vec![1; 8]))
        .unwrap();
    assert_eq!(d, 1.0);
}

#[test]
fn metric_rejects_mismatched_points() {
    let gasket = Space::gasket(8);
    assert!(matches!(
        gasket.metric(&Point::real(0.1), &Point::Address(vec![0; 8])),
        Err(Error::PointMismatch { .. })
    ));
    // wrong depth
    assert!(gasket
        .metric(&Point::Address(vec![0; 7]), &Point::Address(vec![0; 8]))
        .is_err());
    assert!(Space::finite(3).metric(&Point::State(3), &Point::State(0)).is_err());
}

#[test]
fn metric_axioms_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for space in zoo() {
        for _ in 0..10_000 {
            let (a, b, c) = (space.sample(&mut rng), space.sample(&mut rng), space.sample(&mut rng));
            let ab = space.metric(&a, &b).unwrap();
            let ba = space.metric(&b, &a).unwrap();
            let bc = space.metric(&b, &c).unwrap();
            let ac = space.metric(&a, &c).unwrap();
            assert!(ab >= 0.0);
            assert!((ab - ba).abs() <= 1e-12, "{}: symmetry", space.name());
            assert!(ac <= ab + bc + 1e-12, "{}: triangle inequality", space.name());
            assert_eq!(space.metric(&a, &a).unwrap(), 0.0);
            assert!(ab <= space.diameter() + 1e-12, "{}: diameter bound", space.name());
        }
    }
}

#[test]
fn anchors_are_one_lipschitz() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for space in zoo() {
        for _ in 0..2_000 {
            let (a, b) = (space.sample(&mut rng), space.sample(&mut rng));
            let (pa, pb) = (space.anchor(&a), space.anchor(&b));
            let euclid = (pa[0] - pb[0]).hypot(pa[1] - pb[1]);
            assert!(euclid <= space.dist(&a, &b) + 1e-12, "{}", space.name());
        }
    }
}

#[test]
fn epsilon_net_examples() {
    let net = Space::interval().epsilon_net(0.5).unwrap();
    assert_eq!(net, vec![Point::real(0.0), Point::real(0.5), Point::real(1.0)]);
    assert_eq!(Space::gasket(8).epsilon_net(1.0).unwrap().len(), 1);
    assert_eq!(Space::gasket(8).epsilon_net(2.5).unwrap().len(), 1);
    assert_eq!(Space::finite(4).epsilon_net(0.01).unwrap().len(), 4);
    assert!(Space::interval().epsilon_net(0.0).is_err());
    assert!(Space::interval().epsilon_net(-1.0).is_err());
}

#[test]
fn epsilon_nets_cover_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for space in zoo() {
        for eps in [0.3, 0.11] {
            let net = space.epsilon_net(eps).unwrap();
            for _ in 0..10_000 {
                let p = space.sample(&mut rng);
                let nearest = net.iter().map(|q| space.dist(&p, q)).fold(f64::INFINITY, f64::min);
                assert!(nearest <= eps + 1e-12, "{} eps={eps}: {nearest}", space.name());
            }
        }
    }
}

#[test]
fn grid_examples() {
    let grid = Space::interval().grid(0.25).unwrap();
    assert_eq!(grid.len(), 4);
    assert_eq!(grid.cells()[0].rep, Point::real(0.125));
    assert_eq!(grid.cells()[3].rep, Point::real(0.875));
    assert!(grid.cells().iter().all(|c| c.radius == 0.125));

    let gasket = Space::gasket(8);
    for k in 0..5 {
        let mesh = 0.5f64.powi(k);
        assert_eq!(gasket.grid(mesh).unwrap().len(), 3usize.pow(k as u32));
        assert_eq!(gasket.grid_cell_count(mesh), 3usize.pow(k as u32));
    }

    let carpet = Space::carpet(6);
    assert_eq!(carpet.grid(2f64.sqrt() / 3.0).unwrap().len(), 8);
    assert!(Space::interval().grid(0.0).is_err());
}

#[test]
fn grids_cover_and_locate() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for space in zoo() {
        for mesh in [0.4, 0.07] {
            let grid = space.grid(mesh).unwrap();
            assert_eq!(grid.len(), space.grid_cell_count(mesh), "{}", space.name());
            for (i, c) in grid.cells().iter().enumerate() {
                assert_eq!(c.id, i);
                assert!(c.radius <= mesh + 1e-12);
                assert!(space.contains(&c.rep), "{} rep {}", space.name(), c.rep);
                assert_eq!(grid.locate(&space, &c.rep), Some(i), "{} rep {}", space.name(), c.rep);
            }
            for _ in 0..5_000 {
                let p = space.sample(&mut rng);
                let id = grid.locate(&space, &p).unwrap();
                let cell = &grid.cells()[id];
                assert!(
                    space.dist(&p, &cell.rep) <= cell.radius + 1e-12,
                    "{} mesh {mesh}: {p} not within its cell",
                    space.name()
                );
            }
        }
    }
}

#[test]
fn address_cylinders_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for space in [Space::cantor(10), Space::gasket(10), Space::carpet(6)] {
        let ifs = space.ifs().unwrap().clone();
        for _ in 0..2_000 {
            let a = space.sample(&mut rng);
            let Point::Address(mut w) = space.sample(&mut rng) else {
                unreachable!()
            };
            let Point::Address(u) = &a else { unreachable!() };
            let k = rng.gen_range(0..ifs.depth());
            w[..k].copy_from_slice(&u[..k]);
            let b = Point::Address(w);
            let bound = ifs.ratio().powi(k as i32) * ifs.diameter();
            assert!(space.dist(&a, &b) <= bound + 1e-12);
        }
    }
}

#[test]
fn canonical_dimensions() {
    let dims: Vec<usize> = zoo().iter().map(Space::dimension).collect();
    assert_eq!(dims, vec![1, 1, 2, 0, 1, 1, 1, 0]);
}
