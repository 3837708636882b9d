use mbdqc::bounds::*;
use proptest::prelude::*;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

fn bp(d: usize, s: usize, w: usize, k: usize, c: f64) -> BoundParams {
    BoundParams { d, s, w, k, c, p_err: 0.0 }
}

fn p_d(params: &BoundParams) -> f64 {
    security_error(params, GridOptions::default()).unwrap().p_d
}

#[test]
fn tail_examples() {
    assert!(close(binom_upper_tail(100, 0.1, 50.0).unwrap(), 1.2664165549094176e-14, 1e-10));
    assert_eq!(binom_upper_tail(100, 0.1, 10.0).unwrap(), 1.0);
    assert!(binom_lower_tail(100, 0.5, 60.0).is_err());
    assert!(close(binom_lower_tail(100, 0.5, 40.0).unwrap(), (-2.0f64).exp(), 1e-12));
    let once = binom_upper_tail(100, 0.2, 30.0).unwrap();
    let twice = binom_upper_tail(200, 0.2, 60.0).unwrap();
    assert!(close(twice, once * once, 1e-12));

    assert_eq!(hypergeom_tail(100, 50, 20, 0.0, TailSide::Upper).unwrap(), 1.0);
    let up = hypergeom_tail(100, 50, 20, 0.2, TailSide::Upper).unwrap();
    let low = hypergeom_tail(100, 50, 20, 0.2, TailSide::Lower).unwrap();
    assert!(close(up, 0.20189651799465538, 1e-10));
    assert_eq!(up, low);
    assert!(hypergeom_tail(100, 90, 20, 0.2, TailSide::Upper).is_err());
}

#[test]
fn correctness_and_robustness_examples() {
    assert!(close(eps_cor(100, 0.1).unwrap(), (-32.0f64).exp(), 1e-12));
    assert!(close(eps_cor(1, 0.0).unwrap(), 0.6065306597126334, 1e-12));
    assert!(eps_cor(1000, 0.4999999).unwrap() > 0.99);
    assert!(eps_cor(10, 0.5).is_err());

    let r = eps_rob(10, 100, 10, 0.0, 0.0).unwrap();
    assert!(close(r.reject, (-2.0f64 * 0.01 * 100.0).exp(), 1e-12));
    assert!(close(eps_rob(10, 100, 10, 0.0, 0.05).unwrap().reject, 0.6065306597126334, 1e-12));
    assert!(eps_rob(10, 100, 10, 0.0, 0.1).is_err());
    assert!(eps_rob(10, 100, 90, 0.3, 0.2).is_err());
}

#[test]
fn eps_and_nu_examples() {
    let params = bp(200, 200, 2, 2, 0.0);
    let delta = params.delta(DeltaConvention::Range);
    assert!(close(delta, 0.48, 1e-12));
    assert_eq!(eps_of_phi(&params, delta, &[0.0]).unwrap(), 1.0);
    let phi = delta / 2.0;
    let chi = delta / 4.0;
    let v = eps_of_phi(&params, phi, &[chi]).unwrap();
    let m = 0.5 - phi - chi;
    let oracle = (-2.0 * chi * chi * 200.0).exp() + (-2.0 * (m / 2.0 - 0.01f64).powi(2) / m * 200.0).exp();
    assert!(v < 1.0 && close(v, oracle, 1e-12));
    let coarse = eps_of_phi(&params, phi, &[0.0, chi]).unwrap();
    let fine = eps_of_phi(&params, phi, &lattice(delta - phi, 50)).unwrap();
    assert!(fine <= coarse && coarse <= v);

    assert_eq!(nu_of_phi(&params, 0.0, &[0.0]).unwrap(), 1.0);
    let nu = nu_of_phi(&bp(100, 100, 1, 1, 0.0), 0.2, &[0.1]).unwrap();
    let second = (-2.0f64 * 0.01 / 0.6 * 100.0).exp();
    assert!(close(second, 0.035673993347252, 1e-9));
    assert!(close(nu, (-2.0f64).exp() + second, 1e-12));
    let bigger = nu_of_phi(&bp(400, 100, 1, 1, 0.0), 0.2, &[0.1]).unwrap();
    assert!(bigger < nu);
    assert!(nu_of_phi(&params, 0.1, &[0.2]).is_err());
}

#[test]
fn no_margin_is_vacuous() {
    let b = security_error(&bp(10, 10, 5, 2, 0.0), GridOptions::default()).unwrap();
    assert_eq!(b.p_d, 1.0);
    assert!(b.diagnostic.unwrap().contains("no security margin"));
}

#[test]
fn grid_dominates_closed_form() {
    let params = bp(500, 500, 5, 2, 0.0);
    let b = security_error(&params, GridOptions::default()).unwrap();
    let cf = b.closed_form.unwrap();
    let floor = (-2.0 * (b.delta / 4.0).powi(2) * 500.0).exp();
    assert!(cf.eps_phi <= 2.0 * floor + 1e-300 && cf.nu_phi <= 2.0 * floor + 1e-300);
    assert!(b.grid_p_d <= cf.p_d);
    assert!(b.p_d <= cf.p_d && b.p_d > 0.0);
    assert!(close(b.neg_log2_p_d, -b.p_d.log2(), 1e-12));
}

#[test]
fn quotient_convention_reports_both() {
    let params = bp(500, 500, 5, 2, 0.0);
    let opts = GridOptions { convention: DeltaConvention::Quotient, ..GridOptions::default() };
    let b = security_error(&params, opts).unwrap();
    assert!(close(b.delta, 0.5 - 0.005, 1e-12));
    assert!(close(b.delta_alternative, 0.48, 1e-12));
    assert!(b.diagnostic.is_some());
    assert!("range".parse::<DeltaConvention>().is_ok());
    assert!("bogus".parse::<DeltaConvention>().is_err());
}

#[test]
fn security_error_scales_linearly() {
    let lambdas = [1.0, 2.0, 4.0, 8.0];
    let ys: Vec<f64> = lambdas
        .iter()
        .map(|&l| -p_d(&bp((50.0 * l) as usize, (50.0 * l) as usize, l as usize, 2, 0.0)).ln())
        .collect();
    let mx = lambdas.iter().sum::<f64>() / 4.0;
    let my = ys.iter().sum::<f64>() / 4.0;
    let slope = lambdas.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / lambdas.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!(ys[0] > 0.0);
    assert!(slope >= 0.9 * ys[0], "slope {slope}, base {}", ys[0]);
}

#[test]
fn security_error_is_monotone_on_lattice() {
    let mut checked = 0;
    for &c in &[0.0, 0.1] {
        for &k in &[1, 2, 3, 4, 6] {
            for &w in &[1, 3] {
                for &(d, s) in &[(20, 20), (60, 40), (100, 150), (200, 200), (400, 300)] {
                    let base = p_d(&bp(d, s, w, k, c));
                    assert!(p_d(&bp(d, s + 25, w, k, c)) <= base + 1e-15, "s step at {d} {s} {w} {k} {c}");
                    assert!(p_d(&bp(d + 25, s, w, k, c)) <= base + 1e-15, "d step at {d} {s} {w} {k} {c}");
                    checked += 1;
                }
            }
        }
    }
    assert_eq!(checked, 100);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn outputs_are_probabilities(d in 1usize..600, s in 1usize..600, wf in 0.0f64..0.3, k in 1usize..8, c in 0.0f64..0.49) {
        let w = ((s as f64) * wf) as usize;
        let b = security_error(&bp(d, s, w, k, c), GridOptions::default()).unwrap();
        for v in [b.p_d, b.grid_p_d, b.eps_phi, b.nu_phi] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!((0.0..=1.0).contains(&eps_cor(d, c).unwrap()));
        if let Some(cf) = b.closed_form {
            prop_assert!(b.p_d <= cf.p_d);
        }
    }
}
