use std::f64::consts::LOG2_E;

use ardf_core::estimation::{mmse, ChannelPoint};
use ardf_core::information::{
    conditional_mutual_info, mc_mutual_info, mmse_series, mutual_info, mutual_info_checked, mutual_info_series,
    verify_immse, MiMethod, SeriesCoefficients,
};
use ardf_core::numerics::{default_gamma_grid, geometric_grid, limit_at_zero};
use ardf_core::{MixtureSpec, SideInfoModel, SourceModel};
use proptest::prelude::*;

fn pt(gamma: f64, k: u32) -> ChannelPoint {
    ChannelPoint::new(gamma, k).unwrap()
}

fn mixture() -> SourceModel {
    MixtureSpec::new(0.5, 1.0, 5.0).unwrap().source()
}

fn bits(s: &SourceModel, gamma: f64, k: u32, method: MiMethod) -> f64 {
    mutual_info(s, pt(gamma, k), method).unwrap().bits
}

#[test]
fn gaussian_examples() {
    let g = SourceModel::gaussian(0.0, 1.0).unwrap();
    assert!((bits(&g, 1.0, 1, MiMethod::EntropyDiff) - 0.5).abs() < 1e-7);
    assert_eq!(bits(&g, 0.5, 2, MiMethod::EntropyDiff), bits(&g, 1.0, 1, MiMethod::EntropyDiff));
    for gamma in geometric_grid(0.01, 4.0, 20) {
        let want = 0.5 * (1.0 + gamma).log2();
        for method in [MiMethod::EntropyDiff, MiMethod::ImmseIntegral] {
            let got = bits(&g, gamma, 1, method);
            assert!((got - want).abs() <= 1e-6 * want, "{method:?} γ={gamma}: {got} vs {want}");
        }
    }
    assert_eq!(bits(&mixture(), 0.0, 1, MiMethod::EntropyDiff), 0.0);
}

// independent high-precision quadrature values
#[test]
fn frozen_mutual_information() {
    let cases = [
        (mixture(), 0.25, 0.159_844_656_039_826_36),
        (mixture(), 1.0, 0.479_692_712_752_151_2),
        (SourceModel::two_point(1.0).unwrap(), 1.0, 0.485_944_154_132_935_3),
        (SourceModel::uniform_with_variance(1.0).unwrap(), 1.0, 0.496_172_608_647_303_5),
    ];
    for (s, gamma, want) in cases {
        for method in [MiMethod::EntropyDiff, MiMethod::ImmseIntegral] {
            let got = bits(&s, gamma, 1, method);
            assert!((got - want).abs() < 1e-9, "{} {method:?}: {got} vs {want}", s.describe());
        }
    }
}

#[test]
fn routes_agree_on_mixture() {
    let m = mixture();
    let a = bits(&m, 0.25, 1, MiMethod::EntropyDiff);
    let b = bits(&m, 0.25, 1, MiMethod::ImmseIntegral);
    assert!((a - b).abs() < 1e-5);
    assert!(mutual_info_checked(&m, pt(0.25, 1)).is_ok());
}

#[test]
fn series_examples() {
    let g = SourceModel::gaussian(0.0, 1.0).unwrap();
    let s = mutual_info_series(&g, 0.01).unwrap();
    assert!((s.bits - 0.5 * 1.01f64.log2()).abs() < 1e-9, "{s:?}");
    let c = SeriesCoefficients::of(&g).unwrap();
    for (ci, want) in c.c.iter().zip([0.5, -0.25, 1.0 / 6.0, -0.125]) {
        assert!((ci - want * LOG2_E).abs() < 1e-14);
    }
    let pm = SeriesCoefficients::of(&SourceModel::two_point(1.0).unwrap()).unwrap();
    assert!((pm.c[3] + 10.0 / 48.0 * LOG2_E).abs() < 1e-14);
    assert_eq!(mutual_info_series(&mixture(), 0.0).unwrap().bits, 0.0);
    assert_eq!(mmse_series(&mixture(), 0.0).unwrap(), 1.0);
    assert!(mutual_info_series(&g, 0.2).is_err());
}

#[test]
fn mmse_series_against_quadrature() {
    let m = mixture();
    let series = mmse_series(&m, 0.02).unwrap();
    let quad = mmse(&m, pt(0.02, 1)).unwrap();
    assert!((series - quad).abs() < 1e-4 * quad, "{series} vs {quad}");
    assert!((quad - 0.980_357_734_517_261_2).abs() < 1e-10);
}

#[test]
fn series_error_scales_with_fifth_power() {
    // |entropy-difference − series| / (γσ²)⁵ stays bounded as γ shrinks
    for s in [SourceModel::gaussian(0.0, 1.0).unwrap(), SourceModel::two_point(1.0).unwrap(), mixture()] {
        let c: Vec<f64> = [0.01, 0.005, 0.0025]
            .iter()
            .map(|&g| {
                let d = bits(&s, g, 1, MiMethod::EntropyDiff) - mutual_info_series(&s, g).unwrap().bits;
                d.abs() / (g * s.variance()).powi(5)
            })
            .collect();
        assert!(c.iter().all(|v| v.is_finite() && *v < 1e3), "{}: {c:?}", s.describe());
    }
}

#[test]
fn immse_examples() {
    let grid = [0.1, 0.5, 1.0, 2.0];
    let g = verify_immse(&SourceModel::gaussian(0.0, 1.0).unwrap(), &grid).unwrap();
    assert!(g.max_relative_deviation < 1e-5, "{g:?}");
    let m = verify_immse(&mixture(), &grid).unwrap();
    assert!(m.max_relative_deviation < 1e-3, "{m:?}");
    let pm = verify_immse(&SourceModel::two_point(1.0).unwrap(), &[1.0]).unwrap();
    assert!(pm.max_relative_deviation < 1e-3, "{pm:?}");
    assert!(verify_immse(&mixture(), &[6.0]).is_err());
}

#[test]
fn conditional_limits() {
    let gj = SideInfoModel::jointly_gaussian(0.0, 1.0, 0.8, 64).unwrap();
    let l = limit_at_zero(|g| conditional_mutual_info(&gj, pt(g, 1)).unwrap().bits / g, &default_gamma_grid());
    assert!((l.value - 0.259_685_107).abs() < 0.02 * 0.259_685_107, "{l:?}");
    let ind = MixtureSpec::new(0.5, 1.0, 5.0).unwrap().indicator_side_info();
    let l = limit_at_zero(|g| conditional_mutual_info(&ind, pt(g, 3)).unwrap().bits / g, &default_gamma_grid());
    let want = 3.0 * 0.5 * LOG2_E;
    assert!((l.value - want).abs() < 0.02 * want, "{l:?}");
    assert_eq!(conditional_mutual_info(&ind, pt(0.0, 1)).unwrap().bits, 0.0);
}

#[test]
fn k_observation_simulation_matches_reduction() {
    let m = mixture();
    for (k, seed) in [(2, 11), (3, 12)] {
        let est = mc_mutual_info(&m, pt(0.3, k), 40_000, seed).unwrap();
        let q = bits(&m, 0.3, k, MiMethod::EntropyDiff);
        assert!(est.covers(q), "k={k}: {est:?} vs {q}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn monotone_in_snr_and_k(g in 0.001f64..3.0, k in 1u32..5) {
        let m = mixture();
        let base = bits(&m, g, k, MiMethod::EntropyDiff);
        prop_assert!(base >= 0.0);
        prop_assert!(bits(&m, g * 1.1, k, MiMethod::EntropyDiff) >= base);
        prop_assert!(bits(&m, g, k + 1, MiMethod::EntropyDiff) >= base);
    }
}
