//! Certificates, the direct Schur estimate and empirical frame bounds on
//! paired runs.

use qmc_frames::certify::{
    certificate, dilation_uniform_certificate, empirical_frame_bounds, fundamental_nu_grid, schur_epsilon, FrameModel,
    OmegaSource, SchurConfig,
};
use qmc_frames::discrepancy::{shift_discrepancy, ShiftConfig};
use qmc_frames::gabor::{omega_numeric, GaussianWindow};
use qmc_frames::lattice::Lattice;

#[test]
fn schur_below_kh_route_and_monotone() {
    let w = GaussianWindow::optimal();
    let omega = omega_numeric(&w).unwrap();
    let cfg = SchurConfig { nu_grid: 3, ..SchurConfig::default() };
    let mut prev: Option<(f64, f64, f64)> = None;
    for a in [0.25, 0.125, 0.0625] {
        let lat = Lattice::golden().with_scale(a).unwrap();
        let nus = fundamental_nu_grid(&lat, cfg.nu_grid);
        let schur = schur_epsilon(&lat, &w, &nus, &cfg).unwrap();
        let d = shift_discrepancy(&lat, &ShiftConfig::default()).unwrap();
        let kh = d.estimate * omega.bound;
        assert!(schur.epsilon <= kh + schur.budget + omega.integration_error, "a={a}: {} > {kh}", schur.epsilon);
        if let Some((eps, budget, kh_prev)) = prev {
            assert!(schur.epsilon <= eps + budget + schur.budget, "a={a}: {} after {eps}", schur.epsilon);
            assert!(kh <= kh_prev, "a={a}: {kh} after {kh_prev}");
        }
        prev = Some((schur.epsilon, schur.budget, kh));
    }
}

#[test]
fn dilation_uniform_dominates_and_ignores_window_dilation() {
    let lat = Lattice::golden();
    let cfg = ShiftConfig::default();
    let w = GaussianWindow::optimal();
    let taus = [0.25, 0.5, 1.0, 2.0, 4.0];
    let plain = certificate(&lat, 0.125, &w, &cfg, OmegaSource::Closed).unwrap();
    let uniform = dilation_uniform_certificate(&lat, 0.125, &w, &taus, &cfg, OmegaSource::Closed).unwrap();
    assert!(uniform.dilation_uniform && uniform.epsilon >= plain.epsilon);
    assert!(uniform.admissibility.unwrap().margin > 0.6);
    let stretched =
        dilation_uniform_certificate(&lat, 0.125, &w.with_tau(2.0).unwrap(), &taus, &cfg, OmegaSource::Closed).unwrap();
    assert_eq!(uniform, stretched);
}

#[test]
fn frame_bounds_approach_one_as_lattice_refines() {
    let w = GaussianWindow::optimal();
    let model = FrameModel::default();
    let coarse = empirical_frame_bounds(&Lattice::golden(), 0.5, &w, &model).unwrap();
    let fine = empirical_frame_bounds(&Lattice::golden(), 0.125, &w, &model).unwrap();
    assert!(coarse.self_adjoint_defect < 1e-10 && fine.self_adjoint_defect < 1e-10);
    assert!(fine.lower >= 1.0 - 1e-3 && fine.upper <= 1.0 + 1e-3, "{fine:?}");
    assert!(coarse.upper - coarse.lower >= fine.upper - fine.lower);
}

#[test]
fn frame_bounds_for_dilated_windows() {
    for tau in [0.5, 2.0] {
        let w = GaussianWindow::optimal().with_tau(tau).unwrap();
        let fb = empirical_frame_bounds(&Lattice::golden(), 0.125, &w, &FrameModel::default()).unwrap();
        assert!((fb.lower - 1.0).abs() < 1e-3 && (fb.upper - 1.0).abs() < 1e-3, "τ={tau}: {fb:?}");
    }
}
