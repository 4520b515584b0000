// Long-run conservation under all three perturbation families. Energy and
// the two constraints must hold to integrator accuracy regardless of family;
// the vertical momentum must survive exactly when the Hamiltonian keeps its
// rotational symmetry, and visibly drift when it does not.

mod common;

use torus_atlas::geometry::{integrate_every, HamiltonianSpec, Perturbation};

fn drifts(family: Perturbation) -> (f64, f64, f64) {
    let spec = HamiltonianSpec::new(family, 1e-3);
    let start = common::start_at(0.25, 0.45);
    let traj = integrate_every(&spec, &start, 1e-3, 50_000, 100).unwrap();
    let h0 = spec.hamiltonian(&traj.samples[0]);
    let i0 = HamiltonianSpec::momentum(&traj.samples[0]);
    let mut dh = 0.0f64;
    let mut di = 0.0f64;
    let mut dc = 0.0f64;
    for pt in &traj.samples {
        dh = dh.max((spec.hamiltonian(pt) - h0).abs());
        di = di.max((HamiltonianSpec::momentum(pt) - i0).abs());
        let (c1, c2) = pt.constraint_defect();
        dc = dc.max(c1).max(c2);
    }
    (dh, di, dc)
}

#[test]
fn every_family_conserves_energy_and_the_constraints() {
    for family in [
        Perturbation::Q1Potential,
        Perturbation::Q1Q3Potential,
        Perturbation::Q3Kinetic,
    ] {
        let (dh, _, dc) = drifts(family);
        assert!(dh < 1e-10, "{family:?}: energy drift {dh:.3e} over t = 50");
        assert!(dc < 1e-12, "{family:?}: constraint drift {dc:.3e}");
    }
}

#[test]
fn momentum_survives_exactly_the_symmetric_family() {
    let (_, di, _) = drifts(Perturbation::Q3Kinetic);
    assert!(di < 1e-12, "kinetic family broke the momentum by {di:.3e}");

    // The tilted potentials are the whole point of the perturbation: if the
    // momentum stayed flat here, epsilon would not be reaching the force.
    for family in [Perturbation::Q1Potential, Perturbation::Q1Q3Potential] {
        let (_, di, _) = drifts(family);
        assert!(
            di > 1e-5,
            "{family:?}: momentum moved only {di:.3e}; perturbation looks disconnected"
        );
    }
}
