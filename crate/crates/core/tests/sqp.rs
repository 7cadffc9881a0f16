use proptest::prelude::*;
use schnak_core::fem::{FemSpace, MeshP1};
use schnak_core::harness::manufactured_problem;
use schnak_core::krylov::{vecops, LinearOperator};
use schnak_core::model::SchnakenbergParams;
use schnak_core::sqp::{coarsest_guess, continuation_guess, run_sqp, SqpConfig};
use schnak_core::system::{assemble, PrecondConfig};
use schnak_core::trajectory::{ProblemData, Scheme, Trajectory};
use schnak_core::Error;

const SCHEMES: [Scheme; 2] = [Scheme::StormerVerlet, Scheme::BackwardEuler];

fn zero_data(n_t: usize, n_x: usize) -> ProblemData {
    ProblemData {
        u0: vec![0.0; n_x],
        v0: vec![0.0; n_x],
        target_u: vec![vec![0.0; n_x]; n_t + 1],
        target_v: vec![vec![0.0; n_x]; n_t + 1],
        source_u: None,
        source_v: None,
    }
}

fn ramp_data(n_t: usize, n_x: usize) -> ProblemData {
    let mut d = zero_data(n_t, n_x);
    for i in 0..=n_t {
        d.target_u[i] = (0..n_x).map(|j| 1.0 + 0.01 * (i * j) as f64).collect();
        d.target_v[i] = (0..n_x).map(|j| 0.5 - 0.02 * j as f64).collect();
    }
    d
}

#[test]
fn coarsest_guess_uses_scaled_targets_and_zero_adjoints() {
    let zero = zero_data(4, 9);
    for scheme in SCHEMES {
        let g = coarsest_guess(scheme, &zero, 1.0);
        assert_eq!(g, Trajectory::zeros(scheme, 4, 1.0, 9));
    }
    let data = ramp_data(4, 9);
    let sv = coarsest_guess(Scheme::StormerVerlet, &data, 1.0);
    let bwe = coarsest_guess(Scheme::BackwardEuler, &data, 1.0);
    assert_eq!(sv.u, data.target_u);
    assert_eq!(sv.v, data.target_v);
    for g in [&sv, &bwe] {
        assert!(g.p.iter().chain(&g.q).chain(&g.a).chain(&g.b).flatten().all(|x| *x == 0.0));
    }
    for (b, s) in bwe.u.iter().chain(&bwe.v).zip(sv.u.iter().chain(&sv.v)) {
        for (x, y) in b.iter().zip(s) {
            assert_eq!(*x, 0.4 * y);
        }
    }
}

fn smooth_trajectory(scheme: Scheme, n_t: usize, mesh: &MeshP1, f: impl Fn(f64, f64, f64) -> f64) -> Trajectory {
    let mut tr = Trajectory::zeros(scheme, n_t, 1.0, mesh.num_nodes());
    let field = |t: f64| -> Vec<f64> { mesh.coords().iter().map(|[x, y]| f(t, *x, *y)).collect() };
    let (st, at, ct) = (tr.state_times(), tr.adjoint_times(), tr.control_times());
    tr.u = st.iter().map(|&t| field(t)).collect();
    tr.v = st.iter().map(|&t| field(t).into_iter().map(|x| x + 1.0).collect()).collect();
    tr.p = at.iter().map(|&t| field(t)).collect();
    tr.q = at.iter().map(|&t| field(t)).collect();
    tr.a = ct.iter().map(|&t| field(t)).collect();
    tr.b = ct.iter().map(|&t| field(t)).collect();
    tr
}

#[test]
fn continuation_rejects_non_nested_time_grids() {
    let mesh = MeshP1::new(2).unwrap();
    let fine = MeshP1::new(4).unwrap();
    let tr = Trajectory::zeros(Scheme::StormerVerlet, 4, 1.0, mesh.num_nodes());
    assert!(matches!(continuation_guess(&tr, &mesh, &fine, 6, 0.8), Err(Error::InvalidArgument(_))));
    assert!(continuation_guess(&tr, &mesh, &fine, 0, 0.8).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn continuation_on_identical_grids_with_unit_scale_is_identity(
        scheme in prop::sample::select(SCHEMES.to_vec()),
        n_t in 2usize..6,
        c in -2.0f64..2.0,
    ) {
        let mesh = MeshP1::new(3).unwrap();
        let tr = smooth_trajectory(scheme, n_t, &mesh, |t, x, y| c * (t + x * x - y).sin());
        let out = continuation_guess(&tr, &mesh, &mesh, n_t, 1.0).unwrap();
        prop_assert_eq!(out, tr);
    }

    #[test]
    fn continuation_keeps_constants_up_to_scale(
        scheme in prop::sample::select(SCHEMES.to_vec()),
        n_t in 2usize..5,
        r in 1usize..4,
        c in -3.0f64..3.0,
        scale in 0.1f64..1.5,
    ) {
        let coarse = MeshP1::new(2).unwrap();
        let fine = MeshP1::new(4).unwrap();
        let tr = smooth_trajectory(scheme, n_t, &coarse, |_, _, _| c);
        let out = continuation_guess(&tr, &coarse, &fine, r * n_t, scale).unwrap();
        prop_assert_eq!(out.n_t(), r * n_t);
        for f in out.u.iter().chain(&out.p).chain(&out.q).chain(&out.a).chain(&out.b) {
            for x in f {
                prop_assert!((x - scale * c).abs() <= 1e-12 * (1.0 + c.abs()));
            }
        }
        for f in &out.v {
            for x in f {
                prop_assert!((x - scale * (c + 1.0)).abs() <= 1e-12 * (2.0 + c.abs()));
            }
        }
    }

    #[test]
    fn continuation_is_exact_for_fields_linear_in_time_and_space(
        scheme in prop::sample::select(SCHEMES.to_vec()),
        n_t in 2usize..5,
        (c0, ct, cx, cy) in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
    ) {
        let coarse = MeshP1::new(2).unwrap();
        let fine = MeshP1::new(6).unwrap();
        let f = move |t: f64, x: f64, y: f64| c0 + ct * t + cx * x + cy * y;
        let tr = smooth_trajectory(scheme, n_t, &coarse, f);
        let out = continuation_guess(&tr, &coarse, &fine, 2 * n_t, 1.0).unwrap();
        let expect = smooth_trajectory(scheme, 2 * n_t, &fine, f);
        for (a, b) in [(&out.u, &expect.u), (&out.v, &expect.v), (&out.p, &expect.p), (&out.a, &expect.a)] {
            for (fa, fb) in a.iter().zip(b) {
                for (x, y) in fa.iter().zip(fb) {
                    prop_assert!((x - y).abs() < 1e-12, "{} vs {}", x, y);
                }
            }
        }
    }
}

#[test]
fn zero_problem_converges_in_one_iteration() {
    let space = FemSpace::new(3).unwrap();
    for scheme in SCHEMES {
        let params = SchnakenbergParams::with_beta(1e-2, 6);
        let data = zero_data(6, space.num_nodes());
        let guess = coarsest_guess(scheme, &data, 1.0);
        let (traj, stats) = run_sqp(scheme, &space, &params, &data, &guess, &SqpConfig::default()).unwrap();
        assert!(stats.converged, "{scheme}");
        assert_eq!(stats.sqp_iterations(), 1, "{scheme}");
        assert_eq!(traj, Trajectory::zeros(scheme, 6, 1.0, space.num_nodes()));
    }
}

fn small_manufactured(scheme: Scheme) -> (FemSpace, SchnakenbergParams, ProblemData) {
    let space = FemSpace::new(4).unwrap();
    let n_t = match scheme {
        Scheme::StormerVerlet => 20,
        Scheme::BackwardEuler => 8,
    };
    let params = SchnakenbergParams::with_beta(1e-2, n_t);
    let data = manufactured_problem(&space, &params).unwrap();
    (space, params, data)
}

#[test]
fn runs_are_deterministic() {
    for scheme in SCHEMES {
        let (space, params, data) = small_manufactured(scheme);
        let guess = coarsest_guess(scheme, &data, 1.0);
        let cfg = SqpConfig::default();
        let (t1, s1) = run_sqp(scheme, &space, &params, &data, &guess, &cfg).unwrap();
        let (t2, s2) = run_sqp(scheme, &space, &params, &data, &guess, &cfg).unwrap();
        assert_eq!(t1, t2);
        let counts = |s: &schnak_core::sqp::RunStats| s.iterations.iter().map(|i| i.minres_iterations).collect::<Vec<_>>();
        assert_eq!(counts(&s1), counts(&s2));
        assert_eq!(s1.converged, s2.converged);
    }
}

#[test]
fn converged_solution_satisfies_the_discrete_state_equations() {
    for scheme in SCHEMES {
        let (space, params, data) = small_manufactured(scheme);
        let guess = coarsest_guess(scheme, &data, 1.0);
        let cfg = SqpConfig::default();
        let (traj, stats) = run_sqp(scheme, &space, &params, &data, &guess, &cfg).unwrap();
        assert!(stats.converged, "{scheme}");

        // Linearized at the solution, the state rows reproduce the
        // nonlinear state equations.
        let sys = assemble(scheme, &space, &params, &traj, &data).unwrap();
        let pre = sys.preconditioner(&PrecondConfig::default()).unwrap();
        let w = sys.pack(&traj).unwrap();
        let mut r = sys.rhs().to_vec();
        let aw = sys.apply_vec(&w);
        vecops::axpy(-1.0, &aw, &mut r);
        let half = r.len() / 2;
        r[half..].iter_mut().for_each(|x| *x = 0.0);
        let mut b = sys.rhs().to_vec();
        b[half..].iter_mut().for_each(|x| *x = 0.0);
        let pnorm = |x: &[f64]| vecops::dot(x, &pre.apply_vec(x)).sqrt();
        let rel = pnorm(&r) / pnorm(&b);
        assert!(rel <= 10.0 * cfg.tol_minres, "{scheme}: {rel:e}");
    }
}
