use rwre::annealed::{annealed_probability, urn_path_probability};
use rwre::graph::divergence;
use rwre::graph::lattice::{build_cylinder_graph, build_torus, CylinderSpec, LatticeSpec};
use rwre::reversal::check_cycle_reversal;
use rwre::{Rational, Scalar, VertexId};

fn witness<S: Scalar>() -> S {
    let torus = build_torus(&LatticeSpec::<S>::parse("2,1").unwrap(), &[4]).unwrap();
    let path = torus.parse_path(VertexId(0), "0,1,0,1").unwrap();
    let formula = annealed_probability(&torus.graph, &torus.weights, &path);
    let urn = urn_path_probability(&torus.graph, &torus.weights, &path);
    assert!((formula.clone() - urn).abs() <= S::tolerance(1e-6));
    formula
}

#[test]
fn witness_value_in_every_scalar() {
    assert_eq!(witness::<Rational>(), Rational::new(1.into(), 6.into()));
    assert!((witness::<f64>() - 1.0 / 6.0).abs() < 1e-15);
    assert!((witness::<f32>() - 1.0 / 6.0).abs() < 1e-6);
}

#[test]
fn decimal_weights_parse_exactly() {
    let spec = CylinderSpec::new(3, 2, LatticeSpec::<Rational>::parse("0.3,0.1,0.2,0.2").unwrap()).unwrap();
    let cylinder = build_cylinder_graph(&spec).unwrap();
    assert!(divergence(&cylinder.graph, &cylinder.weights).iter().all(|d| *d == Rational::from_integer(0.into())));
}

#[test]
fn cycle_reversal_holds_in_floats_too() {
    let torus = build_torus(&LatticeSpec::<f64>::parse("0.7,1.3,2.2,0.4").unwrap(), &[3, 3]).unwrap();
    let sigma = torus.parse_path(VertexId(0), "+1,+2,-1,-1,-2,+1").unwrap();
    let sides = check_cycle_reversal(&torus.graph, &torus.weights, &sigma).unwrap();
    assert!(sides.holds(1e-12), "{sides:?}");
}
