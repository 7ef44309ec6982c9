use skdvb::det::mol_solve;
use skdvb::paths::sample_brownian;
use skdvb::scenario::presets;
use skdvb::spde_exact::solve;
use skdvb::spde_numeric::{compare, em_solve, OracleConfig};
use skdvb::verify::ito_residual;

#[test]
fn every_preset_solves_from_its_initial_profile() {
    for name in presets::NAMES {
        let cfg = presets::load(name).unwrap();
        let path = sample_brownian(cfg.tgrid, cfg.seed.unwrap());
        let u = solve(&cfg.scenario, &path, &cfg.sgrid).unwrap();
        let phi = cfg.scenario.phi.sample(&cfg.sgrid, cfg.scenario.t0);
        let err = u.slice(0).iter().zip(&phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{name}: initial mismatch {err}");
        assert!(ito_residual(&u, &cfg.scenario, &path).unwrap().normalized.is_finite());
    }
}

#[test]
fn noise_free_wave_matches_method_of_lines() {
    let cfg = presets::load("wave_deterministic").unwrap();
    let s = &cfg.scenario;
    let (tg, sg) = cfg.study.level(s.t0, s.t_end, 1).unwrap();
    let exact = solve(s, &sample_brownian(tg, 1), &sg).unwrap();
    let mol = mol_solve(&s.delta, &s.mu, &s.beta, &s.alpha, &s.gamma, &s.phi, &sg, &tg).unwrap();
    let e = compare(&exact, &mol).unwrap();
    assert!(e.linf < 1e-4, "{}", e.linf);
}

#[test]
fn oracle_on_a_finer_path_tracks_the_exact_field() {
    let cfg = presets::load("example2_sigma1").unwrap();
    let s = &cfg.scenario;
    let (tg, sg) = cfg.study.level(s.t0, s.t_end, 0).unwrap();
    let coarse = sample_brownian(tg, 17);
    let fine = coarse.refine(2).unwrap();
    let exact = solve(s, &coarse, &sg).unwrap();
    let oracle = em_solve(s, &fine, &OracleConfig::new(sg, tg, 0.5).unwrap()).unwrap();
    let e = compare(&exact, &oracle).unwrap();
    assert!(e.final_linf() < 1e-3, "{}", e.final_linf());
}
