use dicke_mps::dynamics::{evolve, homodyne_increment, krylov_basis, krylov_step_dt, measurement_update, run_trajectory, KrylovConfig};
use dicke_mps::ed::{coherent_amplitudes, dotc, ed_trajectory, DenseSystem, TrajectorySettings};
use dicke_mps::groundstate::{ground_state, DmrgConfig};
use dicke_mps::linalg::TruncationSpec;
use dicke_mps::model::ModelParams;
use dicke_mps::mpo::{build_dicke_ising_mpo, MpOperator};
use dicke_mps::mps::MpsState;
use dicke_mps::noise::NoiseStream;
use dicke_mps::observables::quadrature_mean;
use dicke_mps::trajectory::{ensemble_statistics, TrajectoryRecord};
use num_complex::Complex64;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn product_start(p: &ModelParams, alpha: f64) -> MpsState<f64> {
    let mut locals = vec![coherent_amplitudes(c(alpha), p.n_max)];
    let s = 0.5f64.sqrt();
    for i in 0..p.l {
        locals.push(if i % 2 == 0 { vec![c(1.0), c(0.0)] } else { vec![c(s), c(s)] });
    }
    MpsState::product(&p.site_specs(), &locals).unwrap()
}

#[test]
fn krylov_propagation_tracks_exact() {
    let p = ModelParams::new(1.0, 0.4, 0.3, 0.5, 4).unwrap().with_n_max(4);
    let sys = DenseSystem::new(&p).unwrap();
    let h = build_dicke_ising_mpo::<f64>(&p).unwrap();
    let psi0 = product_start(&p, 0.5);
    let cfg = KrylovConfig { step_dt: 0.05, fit_spec: TruncationSpec::rank(64), ..Default::default() };
    let (psi_t, _) = evolve(&psi0, &h, &cfg, 2.0).unwrap();
    let exact = sys.propagate(&psi0.to_dense(), 2.0);
    let f = dotc(&exact, &psi_t.to_dense()).norm_sqr();
    assert!(f > 1.0 - 1e-6, "fidelity {f}");
}

#[test]
fn krylov_matrix_matches_dense_lanczos() {
    let p = ModelParams::new(1.0, 0.4, 0.3, 0.5, 3).unwrap().with_n_max(4);
    let sys = DenseSystem::new(&p).unwrap();
    let h = build_dicke_ising_mpo::<f64>(&p).unwrap();
    let psi0 = product_start(&p, 0.5).normalized().unwrap();
    let kb = krylov_basis(&psi0, &h, &KrylovConfig { subspace_dim: 6, fit_spec: TruncationSpec::rank(64), ..Default::default() }).unwrap();
    // dense Gram-Schmidt
    let mut vs: Vec<Vec<Complex64>> = vec![psi0.to_dense()];
    for _ in 1..6 {
        let mut w = sys.apply_h(vs.last().unwrap());
        for _ in 0..2 {
            for v in &vs {
                let o = dotc(v, &w);
                w.iter_mut().zip(v).for_each(|(a, b)| *a -= o * b);
            }
        }
        let n = dotc(&w, &w).re.sqrt();
        vs.push(w.into_iter().map(|z| z / n).collect());
    }
    assert_eq!(kb.len(), 6);
    for i in 0..6 {
        for j in 0..6 {
            let d = dotc(&vs[i], &sys.apply_h(&vs[j]));
            assert!((d - kb.h_small[i * 6 + j]).norm() < 1e-8, "{i},{j}: {d} vs {}", kb.h_small[i * 6 + j]);
        }
    }
}

#[test]
fn eigenstate_step_is_a_phase() {
    let p = ModelParams::new(1.0, 0.4, 0.0, 0.0, 3).unwrap().with_n_max(3);
    let h = build_dicke_ising_mpo::<f64>(&p).unwrap();
    let psi = MpsState::<f64>::basis(&p.site_specs(), &[0, 0, 0, 0]).unwrap();
    let cfg = KrylovConfig::default();
    let kb = krylov_basis(&psi, &h, &cfg).unwrap();
    assert_eq!(kb.len(), 1);
    let step = krylov_step_dt(&psi, &h, &cfg, 0.3).unwrap();
    let ov = dicke_mps::mps::overlap(&psi, &step.state).unwrap();
    assert!((ov.norm() - 1.0).abs() < 1e-10);
    assert!((ov - Complex64::new(0.0, 0.3 * 1.2).exp()).norm() < 1e-10);
}

#[test]
fn measurement_matches_dense() {
    let p = ModelParams::new(1.0, 0.4, 0.3, 0.5, 3).unwrap().with_n_max(5);
    let sys = DenseSystem::new(&p).unwrap();
    let psi = product_start(&p, 0.7).normalized().unwrap();
    let (next, _) = measurement_update(&psi, 0.5, 0.01, 0.03).unwrap();
    let dense = sys.measurement_operator(&psi.to_dense(), 0.5, 0.01, 0.03);
    let n = dotc(&dense, &dense).re.sqrt();
    for (a, b) in next.to_dense().iter().zip(&dense) {
        assert!((a - b / n).norm() < 1e-12);
    }
}

#[test]
fn trajectory_matches_dense_with_same_seed() {
    let p = ModelParams::new(1.0, 0.3, 0.2, 0.6, 3).unwrap().with_n_max(8);
    let sys = DenseSystem::new(&p).unwrap();
    let h = build_dicke_ising_mpo::<f64>(&p).unwrap();
    let psi0 = product_start(&p, 0.3).normalized().unwrap();
    let settings = TrajectorySettings { kappa: 0.5, dt: 0.01, t_final: 1.0, seed: 11, observables_every: 10, noise_substeps: 1, keep_states: false };
    let cfg = KrylovConfig { fit_spec: TruncationSpec::rank(64), ..Default::default() };
    let mps = run_trajectory(&psi0, &h, &p, &cfg, &settings).unwrap();
    let ed = ed_trajectory(&sys, &psi0.to_dense(), &settings).unwrap();
    assert!(mps.aborted.is_none());
    assert_eq!(mps.len(), ed.len());
    for k in 0..mps.len() {
        assert!((mps.q_mean[k] - ed.q_mean[k]).abs() < 1e-6, "q at {k}");
        assert!((mps.parity[k] - ed.parity[k]).abs() < 1e-6, "P at {k}");
        assert!((mps.dy[k] - ed.dy[k]).abs() < 1e-8, "dy at {k}");
    }
}

fn vacuum(p: &ModelParams) -> MpsState<f64> {
    MpsState::basis(&p.site_specs(), &vec![0; p.l + 1]).unwrap()
}

#[test]
fn homodyne_statistics() {
    let p = ModelParams::new(1.0, 0.3, 0.2, 0.5, 2).unwrap().with_n_max(12);
    let dt = 0.01;
    let n = 100_000;
    let sd = (dt / n as f64).sqrt();
    let mut noise = NoiseStream::new(1);
    let vac = vacuum(&p);
    let m0: f64 = (0..n).map(|_| homodyne_increment(&vac, 0.0, dt, &mut noise).unwrap()).sum::<f64>() / n as f64;
    assert!(m0.abs() < 4.0 * sd);
    let m1: f64 = (0..n).map(|_| homodyne_increment(&vac, 0.7, dt, &mut noise).unwrap()).sum::<f64>() / n as f64;
    assert!(m1.abs() < 4.0 * sd);
    let coh = product_start(&p, 0.9);
    let field = 2f64.sqrt() * quadrature_mean(&coh).unwrap();
    let kappa = 0.5;
    let m2: f64 = (0..n).map(|_| homodyne_increment(&coh, kappa, dt, &mut noise).unwrap()).sum::<f64>() / n as f64;
    assert!((m2 - kappa.sqrt() * field * dt).abs() < 4.0 * sd);
}

#[test]
fn trivial_measurement_updates() {
    let p = ModelParams::new(1.0, 0.3, 0.2, 0.5, 2).unwrap().with_n_max(5);
    let psi = product_start(&p, 0.6).normalized().unwrap();
    let (same, n) = measurement_update(&psi, 0.0, 0.01, 0.3).unwrap();
    assert!((n - 1.0).abs() < 1e-14);
    assert!((dicke_mps::mps::overlap(&psi, &same).unwrap() - c(1.0)).norm() < 1e-14);
    let vac = vacuum(&p);
    let (v2, _) = measurement_update(&vac, 0.8, 0.01, 0.3).unwrap();
    assert!((dicke_mps::mps::overlap(&vac, &v2).unwrap() - c(1.0)).norm() < 1e-14);
}

#[test]
fn degenerate_update_is_reported() {
    let p = ModelParams::new(1.0, 0.3, 0.2, 0.5, 1).unwrap().with_n_max(1);
    let one = MpsState::<f64>::basis(&p.site_specs(), &[1, 0]).unwrap();
    // Ω|1⟩ = (1 − κ dt/2)|1⟩ + √κ dy |0⟩ vanishes for κ dt = 2, dy = 0
    let r = measurement_update(&one, 2.0, 1.0, 0.0);
    assert!(matches!(r, Err(dicke_mps::Error::DegenerateUpdate { .. })));
}

#[test]
fn null_hamiltonian_and_zero_step() {
    let p = ModelParams::new(1.0, 0.3, 0.2, 0.5, 2).unwrap().with_n_max(3);
    let zero = MpOperator::<f64>::identity(&p.site_specs()).unwrap().scale(c(0.0));
    let psi = product_start(&p, 0.5);
    let kb = krylov_basis(&psi, &zero, &KrylovConfig::default()).unwrap();
    assert_eq!(kb.len(), 1);
    assert!(kb.h_small[0].norm() < 1e-15);
    let h = build_dicke_ising_mpo::<f64>(&p).unwrap();
    let st = krylov_step_dt(&psi, &h, &KrylovConfig::default(), 0.0).unwrap();
    let ov = dicke_mps::mps::overlap(&psi.normalized().unwrap(), &st.state).unwrap();
    assert!((ov - c(1.0)).norm() < 1e-12);
}

#[test]
fn step_norm_and_basis_orthogonality() {
    let p = ModelParams::new(1.0, 0.4, 0.3, 0.5, 4).unwrap().with_n_max(4);
    let h = build_dicke_ising_mpo::<f64>(&p).unwrap();
    let psi = product_start(&p, 0.5);
    let cfg = KrylovConfig { fit_spec: TruncationSpec::rank(64), step_dt: 0.05, ..Default::default() };
    let kb = krylov_basis(&psi, &h, &cfg).unwrap();
    assert!(kb.orthogonality_defect() < 1e-8, "{}", kb.orthogonality_defect());
    let st = krylov_step_dt(&psi, &h, &cfg, 0.05).unwrap();
    assert!((st.norm - 1.0).abs() < 1e-8);
    assert!(st.error_estimate < 1e-5);
}

#[test]
fn unmeasured_ground_state_is_stationary() {
    let p = ModelParams::new(1.0, 0.3, 0.2, 0.5, 3).unwrap().with_n_max(6);
    let h = build_dicke_ising_mpo::<f64>(&p).unwrap();
    let gs = ground_state(&h, None, &DmrgConfig::default()).unwrap();
    let settings = TrajectorySettings { kappa: 0.0, dt: 0.1, t_final: 10.0, seed: 1, observables_every: 10, noise_substeps: 1, keep_states: false };
    let rec = run_trajectory(&gs.state, &h, &p, &KrylovConfig::default(), &settings).unwrap();
    for k in 0..rec.len() {
        assert!((rec.n_mean[k] - rec.n_mean[0]).abs() < 1e-6);
        assert!((rec.q_mean[k] - rec.q_mean[0]).abs() < 1e-6);
        assert!((rec.parity[k] - rec.parity[0]).abs() < 1e-6);
        assert!((rec.entropy_osc[k] - rec.entropy_osc[0]).abs() < 1e-6);
    }
}

#[test]
fn same_seed_reproduces_bit_for_bit() {
    let p = ModelParams::new(1.0, 0.3, 0.2, 0.6, 3).unwrap().with_n_max(6);
    let h = build_dicke_ising_mpo::<f64>(&p).unwrap();
    let psi0 = product_start(&p, 0.3);
    let s = TrajectorySettings { kappa: 0.5, dt: 0.02, t_final: 0.6, seed: 5, observables_every: 3, noise_substeps: 1, keep_states: false };
    let cfg = KrylovConfig::default();
    let a = run_trajectory(&psi0, &h, &p, &cfg, &s).unwrap();
    let b = run_trajectory(&psi0, &h, &p, &cfg, &s).unwrap();
    assert_eq!(a, b);
    let (mut fa, mut fb) = (Vec::new(), Vec::new());
    a.write_to(&mut fa, "{}").unwrap();
    b.write_to(&mut fb, "{}").unwrap();
    assert_eq!(fa, fb);
    let back = TrajectoryRecord::read_from(fa.as_slice()).unwrap();
    assert_eq!(back.q_mean, a.q_mean);
    let other = run_trajectory(&psi0, &h, &p, &cfg, &TrajectorySettings { seed: 6, ..s }).unwrap();
    assert_ne!(other.dy, a.dy);
}

fn dense_final_q(sys: &DenseSystem, psi0: &[Complex64], dt: f64, sub: usize, seed: u64) -> (f64, f64) {
    let t_final = 0.5;
    let steps = (t_final / dt).round() as usize;
    let s = TrajectorySettings { kappa: 0.8, dt, t_final, seed, observables_every: steps, noise_substeps: sub, keep_states: false };
    let r = ed_trajectory(sys, psi0, &s).unwrap();
    (*r.q_mean.last().unwrap(), r.norm_drift.iter().cloned().fold(0.0, f64::max))
}

#[test]
fn strong_convergence_under_dt_halving() {
    let p = ModelParams::new(1.0, 0.3, 0.2, 0.6, 2).unwrap().with_n_max(10);
    let sys = DenseSystem::new(&p).unwrap();
    let psi0 = product_start(&p, 0.8).to_dense();
    let base = 0.02;
    let mut errs = [0.0f64; 3];
    let mut drifts = [0.0f64; 3];
    let seeds = 20;
    for seed in 0..seeds {
        // the reference runs at base/16 with one draw per step; coarser runs
        // sum the same fine draws
        let (q_ref, _) = dense_final_q(&sys, &psi0, base / 16.0, 1, seed);
        for (k, m) in [16usize, 8, 4].iter().enumerate() {
            let (q, d) = dense_final_q(&sys, &psi0, base * (*m as f64) / 16.0, *m, seed);
            errs[k] += (q - q_ref).abs() / seeds as f64;
            drifts[k] = drifts[k].max(d);
        }
    }
    let order = ((errs[0] / errs[2]).log2()) / 2.0;
    assert!(order >= 0.5, "errors {errs:?}, order {order}");
    assert!(drifts[0] > drifts[1] && drifts[1] > drifts[2], "{drifts:?}");
}

#[test]
fn ensemble_statistics_basics() {
    let p = ModelParams::new(1.0, 0.3, 0.2, 0.6, 2).unwrap().with_n_max(6);
    let mut a = TrajectoryRecord::new(1, p, 0.5, 0.1, false);
    a.times = vec![0.0, 0.1];
    a.q_mean = vec![0.0, 1.5];
    a.n_mean = vec![1.0, 2.0];
    a.entropy_osc = vec![0.5, 0.4];
    a.parity = vec![1.0, 0.5];
    a.dy = vec![0.0, 0.1];
    a.norm_drift = vec![0.0, 0.0];
    let single = ensemble_statistics(std::slice::from_ref(&a)).unwrap();
    assert_eq!(single.q.mean, a.q_mean);
    assert!(single.q.variance.iter().all(|v| *v == 0.0));
    let mut b = a.clone();
    b.seed = 2;
    b.q_mean = vec![0.0, -1.5];
    let both = ensemble_statistics(&[a.clone(), b]).unwrap();
    assert!(both.q.mean[1].abs() < 1e-15);
    let mut c2 = a.clone();
    c2.times = vec![0.0, 0.2];
    assert!(ensemble_statistics(&[a, c2]).is_err());
}
