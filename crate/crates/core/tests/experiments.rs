use rwre::environment::{quenched_walk, sample_environment_stream};
use rwre::experiments::{cylinder_exit_from_origin, lattice_transience, velocity_probe};
use rwre::graph::lattice::{build_torus, CylinderSpec, Geometry, LatticeSpec};
use rwre::parallel::Runner;
use rwre::stats::combined_se;
use rwre::stopping::{StopReason, StoppingRule};
use rwre::{RngStream, VertexId};

fn lattice(text: &str) -> LatticeSpec<f64> {
    LatticeSpec::parse(text).unwrap()
}

#[test]
fn torus_walk_bookkeeping_matches_rescan() {
    let torus = build_torus(&lattice("1.5,1,0.7,0.9"), &[9, 7]).unwrap();
    let target = torus.vertex(&[2, 1]);
    let rule = StoppingRule::steps(300).right_at(3).left_at(-3).until_hit(target).transverse(2);
    for i in 0..1000 {
        let stream = RngStream::new(99, i);
        let env = sample_environment_stream(&torus.graph, &torus.weights, stream);
        let mut rng = stream.with_domain(rwre::rng::domain::WALK).rng();
        let out = quenched_walk(&torus.graph, &env, VertexId(0), &rule, Some(&torus), &mut rng).unwrap();
        let visited = out.trajectory.vertices();
        assert_eq!(visited.len() as u64, out.report.step + 1);
        let first = |pred: &dyn Fn(usize, VertexId) -> bool| {
            visited.iter().enumerate().find(|&(n, &v)| pred(n, v)).map(|(n, _)| n as u64)
        };
        let candidates = [
            (first(&|_, v| torus.abscissa(v) >= 3), StopReason::Right),
            (first(&|_, v| torus.abscissa(v) <= -3), StopReason::Left),
            (first(&|n, v| n >= 1 && v == target), StopReason::Target),
            (first(&|_, v| torus.transverse_norm_sq(v) > 4), StopReason::Transverse),
            (Some(300), StopReason::StepCap),
        ];
        let expected = candidates.iter().filter_map(|&(t, r)| t.map(|t| (t, r))).min_by_key(|&(t, _)| t).unwrap();
        assert_eq!((out.report.step, out.report.reason), expected, "replica {i}");
    }
}

#[test]
fn trap_weights_slow_the_walk_down() {
    let rs = velocity_probe(&lattice("0.1,0.05,0.1,0.1"), &[100, 1000, 10000], 400, 3, &Runner::new(0)).unwrap();
    for pair in rs.windows(2) {
        let gap = pair[0].estimate - pair[1].estimate;
        assert!(gap > 3.0 * combined_se(pair[0].se, pair[1].se), "{pair:?}");
    }
    assert!(rs[2].estimate < 0.01);
}

#[test]
fn drifting_walk_keeps_a_positive_speed() {
    let rs = velocity_probe(&lattice("2,1,1,1"), &[1000, 10000], 400, 3, &Runner::new(0)).unwrap();
    assert!(rs[1].estimate > 0.1);
    assert!((rs[0].estimate - rs[1].estimate).abs() < 4.0 * combined_se(rs[0].se, rs[1].se));
}

#[test]
fn cylinder_estimates_converge_to_the_lattice_value() {
    // Wider cylinders approach Z^d; overlap within 4 combined SE.
    let alpha = lattice("2,1,1,1");
    let runner = Runner::new(0);
    let wide = |n: usize| {
        cylinder_exit_from_origin(&CylinderSpec::new(n, 8, alpha.clone()).unwrap(), 40_000, 1_000_000, 5 + n as u64, &runner)
            .unwrap()
    };
    let (c8, c16) = (wide(8), wide(16));
    let plane = &lattice_transience(&alpha, &[8], 40_000, 1_000_000, 6, &runner).unwrap()[0];
    assert!((c8.estimate - c16.estimate).abs() < 4.0 * combined_se(c8.se, c16.se));
    assert!((c16.estimate - plane.estimate).abs() < 4.0 * combined_se(c16.se, plane.se));
    for r in [&c8, &c16, plane] {
        assert!(r.estimate >= 0.5 - 3.0 * r.se);
    }
}

#[test]
fn three_dimensional_transience_is_decided() {
    let rs = lattice_transience(&lattice("2,1,1,1,1,1"), &[10, 20], 2000, 100_000, 7, &Runner::new(0)).unwrap();
    for r in &rs {
        assert!((r.undecided as f64) <= 0.02 * r.replicas as f64);
        assert!(r.estimate >= 0.5 - 3.0 * r.se, "{r:?}");
    }
}

#[test]
fn one_dimensional_cylinder_ignores_n() {
    let runner = Runner::sequential();
    let a = cylinder_exit_from_origin(&CylinderSpec::new(1, 4, lattice("2,1")).unwrap(), 2000, 10_000, 1, &runner).unwrap();
    let b = cylinder_exit_from_origin(&CylinderSpec::new(7, 4, lattice("2,1")).unwrap(), 2000, 10_000, 1, &runner).unwrap();
    assert_eq!(a.estimate, b.estimate);
}
