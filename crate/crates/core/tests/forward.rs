use approx::assert_relative_eq;
use schnak_core::fem::FemSpace;
use schnak_core::forward::{build_targets, garvie_init, simulate, unstable_band, ForwardConfig, Perturbation};
use schnak_core::model::steady_state;
use schnak_core::Error;

const A_G: f64 = 0.126779;
const B_G: f64 = 0.792366;
const GAMMA: f64 = 150.0;

fn variance(f: &[f64]) -> f64 {
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    f.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / f.len() as f64
}

fn norm(f: &[f64]) -> f64 {
    f.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff(f: &[f64], g: &[f64]) -> Vec<f64> {
    f.iter().zip(g).map(|(a, b)| a - b).collect()
}

#[test]
fn perturbation_peaks_at_center_and_vanishes_far_away() {
    let space = FemSpace::new(6).unwrap();
    let (us, vs) = steady_state(A_G, B_G).unwrap();
    let (u0, v0) = garvie_init(A_G, B_G, &space.mesh, &Perturbation::default()).unwrap();
    let center = space.mesh.node(2, 3);
    assert_relative_eq!(u0[center] - us, 1e-3, max_relative = 1e-12);
    let corner = space.mesh.node(6, 6);
    assert!(u0[corner] - us < 1e-3 * (-100.0f64 * (4.0 / 9.0 + 0.25)).exp() * 1.0001);
    assert!(v0.iter().all(|&x| x == vs));
    assert!(garvie_init(0.0, 0.0, &space.mesh, &Perturbation::default()).is_err());
}

#[test]
fn zero_data_stays_zero() {
    let space = FemSpace::new(4).unwrap();
    let mut cfg = ForwardConfig::new(0.0, 0.0, GAMMA, 4);
    cfg.t_final = 0.5;
    cfg.snapshot_times = vec![0.0, 0.25, 0.5];
    let zero = vec![0.0; space.num_nodes()];
    let run = simulate(&cfg, &space, &zero, &zero).unwrap();
    assert_eq!(run.snapshots.len(), 3);
    for s in &run.snapshots {
        assert!(s.u.iter().chain(&s.v).all(|&x| x == 0.0));
    }
}

#[test]
fn homogeneous_start_follows_the_kinetics_ode() {
    let n = 4;
    let space = FemSpace::new(n).unwrap();
    let (us, vs) = steady_state(A_G, B_G).unwrap();
    // Equal diffusion keeps the homogeneous state stable; with D_v = 10 D_u
    // roundoff-level spatial noise would grow at the Turing rate.
    let mut cfg = ForwardConfig::new(A_G, B_G, GAMMA, n);
    cfg.d_v = cfg.d_u;
    cfg.dt = 5e-4;
    cfg.snapshot_times = vec![1.0, 5.0];
    let (u_init, v_init) = (us + 0.2, vs - 0.1);
    let run = simulate(&cfg, &space, &vec![u_init; space.num_nodes()], &vec![v_init; space.num_nodes()]).unwrap();

    // Spatially constant data reduce the scheme to forward Euler on the kinetics.
    let (mut u, mut v) = (u_init, v_init);
    let mut ode = Vec::new();
    for step in 1..=cfg.num_steps() {
        let (du, dv) = (GAMMA * (A_G - u + u * u * v), GAMMA * (B_G - u * u * v));
        u += cfg.dt * du;
        v += cfg.dt * dv;
        if step == 2000 || step == 10000 {
            ode.push((u, v));
        }
    }
    for (s, &(u, v)) in run.snapshots.iter().zip(&ode) {
        for (&x, &y) in s.u.iter().zip(&s.v) {
            assert!((x - u).abs() < 1e-11 && (y - v).abs() < 1e-11, "{x} vs {u}, {y} vs {v}");
        }
    }
    let last = &run.snapshots[1];
    assert!(last.u.iter().all(|x| (x - us).abs() < 1e-8));
    assert!(last.v.iter().all(|x| (x - vs).abs() < 1e-8));
}

#[test]
fn unstable_band_contains_neumann_modes_for_the_chosen_gamma() {
    let (lo, hi) = unstable_band(A_G, B_G, GAMMA, 1.0, 10.0).unwrap().expect("Turing unstable");
    let pi2 = std::f64::consts::PI.powi(2);
    let modes: Vec<f64> = (0..6)
        .flat_map(|m| (0..6).map(move |k| pi2 * (m * m + k * k) as f64))
        .filter(|&k2| k2 > lo && k2 < hi)
        .collect();
    assert!(!modes.is_empty(), "band ({lo}, {hi})");
    // Equal diffusion never destabilizes.
    assert!(unstable_band(A_G, B_G, GAMMA, 1.0, 1.0).unwrap().is_none());
}

#[test]
fn perturbed_start_forms_a_stationary_pattern() {
    let n = 20;
    let space = FemSpace::new(n).unwrap();
    let mut cfg = ForwardConfig::new(A_G, B_G, GAMMA, n);
    cfg.dt = 5e-4;
    cfg.snapshot_times = vec![4.5, 5.0];
    let (u0, v0) = garvie_init(A_G, B_G, &space.mesh, &cfg.perturbation).unwrap();
    let run = simulate(&cfg, &space, &u0, &v0).unwrap();
    let (early, last) = (&run.snapshots[0], &run.snapshots[1]);
    assert!(variance(&last.u) > 1e-2, "variance {}", variance(&last.u));
    let drift = norm(&diff(&last.u, &early.u)) / norm(&last.u);
    assert!(drift <= 1e-3, "drift {drift}");
}

#[test]
fn halving_the_step_shows_first_order_convergence() {
    let n = 10;
    let space = FemSpace::new(n).unwrap();
    let pert = Perturbation {
        amplitude: 0.1,
        ..Perturbation::default()
    };
    let (u0, v0) = garvie_init(A_G, B_G, &space.mesh, &pert).unwrap();
    let snap = |dt: f64| {
        let mut cfg = ForwardConfig::new(A_G, B_G, GAMMA, n);
        cfg.t_final = 0.02;
        cfg.dt = dt;
        cfg.snapshot_times = vec![0.02];
        simulate(&cfg, &space, &u0, &v0).unwrap().snapshots.remove(0).u
    };
    let (s1, s2, s3) = (snap(4e-4), snap(2e-4), snap(1e-4));
    let ratio = norm(&diff(&s1, &s2)) / norm(&diff(&s2, &s3));
    assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn rejects_unstable_steps_and_off_grid_snapshots() {
    // At gamma = 150 forward Euler on the kinetics needs dt below about 9.5e-4.
    let mut cfg = ForwardConfig::new(A_G, B_G, GAMMA, 4);
    assert!(cfg.reaction_amplification().unwrap() > 1.0);
    assert!(matches!(cfg.validate(), Err(Error::InvalidArgument(_))));
    cfg.dt = 9e-4;
    cfg.t_final = 0.9;
    cfg.snapshot_times = vec![0.9];
    assert!(cfg.reaction_amplification().unwrap() < 1.0);
    cfg.validate().unwrap();
    cfg.snapshot_times = vec![0.00015];
    assert!(cfg.validate().is_err());
    cfg.snapshot_times = vec![6.0];
    assert!(cfg.validate().is_err());
}

#[test]
fn blow_up_is_reported_with_its_step() {
    let space = FemSpace::new(2).unwrap();
    let mut cfg = ForwardConfig::new(A_G, B_G, 1.0, 2);
    cfg.t_final = 10.0;
    cfg.dt = 0.01;
    cfg.snapshot_times = vec![];
    let big = vec![50.0; space.num_nodes()];
    match simulate(&cfg, &space, &big, &big) {
        Err(Error::Diverged { step, time }) => {
            assert!(step > 0);
            assert_relative_eq!(time, step as f64 * 0.01, max_relative = 1e-12);
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn targets_ramp_linearly_to_the_snapshot() {
    let u = vec![1.0, 2.0, -4.0];
    let v = vec![0.5, 0.0, 8.0];
    let (tu, tv) = build_targets(&u, &v, 4);
    assert_eq!(tu.len(), 5);
    assert!(tu[0].iter().chain(&tv[0]).all(|&x| x == 0.0));
    assert_eq!(tu[4], u);
    assert_eq!(tv[4], v);
    assert_eq!(tu[2], vec![0.5, 1.0, -2.0]);
}
