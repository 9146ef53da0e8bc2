use vne_darboux::darboux::dressed_trajectory;
use vne_darboux::{
    make_anticommuting_seed, make_delta_commuting_seed, Complex32, DarbouxParamsF32, OperatorMatrixF32,
    Tolerances,
};

#[test]
fn reference_dressing_in_f32() {
    let tol = Tolerances::for_scalar::<f32>();
    let seed = make_anticommuting_seed::<f32>(2, &[1.0], &[1.0], &tol).unwrap();
    let params = DarbouxParamsF32::hermitian(Complex32::new(0.0, 1.0)).unwrap();
    let times: Vec<f32> = (0..11).map(|k| -1.0 + 0.2 * k as f32).collect();
    let traj = dressed_trajectory(&seed, params, &times, &tol).unwrap();
    let minus_sx = OperatorMatrixF32::from_real_rows(&[&[0.0, -1.0], &[-1.0, 0.0]]).unwrap();
    assert_eq!(traj.len(), 11);
    for s in traj.states() {
        assert!(s.distance(&minus_sx) < 1e-5);
    }
}

#[test]
fn f32_agrees_with_f64() {
    let t32 = Tolerances::for_scalar::<f32>();
    let t64 = Tolerances::default();
    let s32 = make_delta_commuting_seed::<f32>(&[(0.3, 0.6), (-0.5, 0.4)], 0.5, &t32).unwrap();
    let s64 = make_delta_commuting_seed::<f64>(&[(0.3, 0.6), (-0.5, 0.4)], 0.5, &t64).unwrap();
    let p32 = DarbouxParamsF32::hermitian(Complex32::new(0.4, 0.9)).unwrap();
    let p64 = vne_darboux::DarbouxParams::hermitian(vne_darboux::Complex64::new(0.4, 0.9)).unwrap();
    let a = dressed_trajectory(&s32, p32, &[-1.0, 0.0, 1.5], &t32).unwrap();
    let b = dressed_trajectory(&s64, p64, &[-1.0, 0.0, 1.5], &t64).unwrap();
    for (x, y) in a.states().iter().zip(b.states()) {
        assert!(x.cast::<f64>().distance(y) < 1e-4);
    }
}

#[test]
fn verification_suite_runs_in_f32() {
    let tol = Tolerances::for_scalar::<f32>();
    let seed = make_anticommuting_seed::<f32>(1, &[1.0, 0.6], &[0.7, 0.4], &tol).unwrap();
    let params = DarbouxParamsF32::hermitian(Complex32::new(0.3, 0.8)).unwrap();
    let times: Vec<f32> = (0..9).map(|k| -2.0 + 0.5 * k as f32).collect();
    let traj = dressed_trajectory(&seed, params, &times, &tol).unwrap();
    let report = vne_darboux::run_suite(&traj, &vne_darboux::SuiteOptions::new("f32", &tol));
    assert!(report.overall, "{:?}", report.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
}
