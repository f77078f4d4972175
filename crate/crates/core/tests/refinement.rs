use ardf_core::numerics::default_gamma_grid;
use ardf_core::refinement::{
    build_schedule, compare, joint_distortion, per_description_distortion, verify_lowrate_additivity,
    write_comparisons_csv, RefinementSchedule, ScheduleRule, CSV_HEADER,
};
use ardf_core::{MixtureSpec, SourceModel};
use proptest::prelude::*;

fn total(l: u32, m: u32) -> f64 {
    compare(&build_schedule(1.0, 0.1, l, m, ScheduleRule::GeometricD).unwrap()).total_rate()
}

// values from an independent evaluation of the stage recursion
#[test]
fn two_and_ten_stage_totals() {
    let two = compare(&build_schedule(1.0, 0.1, 2, 2, ScheduleRule::GeometricD).unwrap());
    assert!((two.schedule.per_description[0] - 0.480_506_146_704_084_3).abs() < 1e-12);
    assert!((two.schedule.rates[0] - 0.528_686_604_3).abs() < 1e-9);
    assert!((two.schedule.rates[1] - two.schedule.rates[0]).abs() < 1e-12);
    assert!((two.total_rate() - 2.114_746_417_213_59).abs() < 1e-10);
    assert!((two.total_loss() - 0.453_782_369_77).abs() < 1e-9);
    let ten = compare(&build_schedule(1.0, 0.1, 2, 10, ScheduleRule::GeometricD).unwrap());
    assert!((ten.total_rate() - 1.756_366_346_923_886_8).abs() < 1e-10);
    assert!((ten.total_loss() - 0.095_402_299_48).abs() < 1e-9);
    assert!(two.total_rate() > ten.total_rate());
}

#[test]
fn single_description_is_lossless() {
    let c = compare(&build_schedule(1.0, 0.1, 1, 7, ScheduleRule::GeometricD).unwrap());
    assert!((c.total_rate() - 0.5 * 10f64.log2()).abs() < 1e-12);
    assert!(c.loss.iter().all(|l| l.abs() < 1e-12));
}

#[test]
fn total_rate_falls_with_more_stages() {
    let rates: Vec<f64> = [1, 2, 5, 10, 20].iter().map(|&m| total(2, m)).collect();
    assert!(rates.windows(2).all(|w| w[1] < w[0]), "{rates:?}");
    let floor = 0.5 * 10f64.log2();
    assert!(rates.iter().all(|r| *r > floor));
}

#[test]
fn rules_and_validation() {
    let g = build_schedule(1.0, 0.1, 2, 4, ScheduleRule::GeometricD).unwrap();
    let e = build_schedule(1.0, 0.1, 2, 4, ScheduleRule::EqualRate).unwrap();
    for (a, b) in g.targets.iter().zip(&e.targets) {
        assert!((a - b).abs() < 1e-14);
    }
    assert!(build_schedule(1.0, 0.1, 2, 4, ScheduleRule::Explicit).is_err());
    assert!(build_schedule(1.0, 1.5, 2, 4, ScheduleRule::GeometricD).is_err());
    assert!(build_schedule(1.0, 0.1, 0, 4, ScheduleRule::GeometricD).is_err());
    let err = RefinementSchedule::explicit(1.0, vec![0.5, 0.6], 2).unwrap_err();
    assert!(err.to_string().contains("decrease"), "{err}");
    let ok = RefinementSchedule::explicit(1.0, vec![0.5, 0.2, 0.1], 3).unwrap();
    assert_eq!(ok.stages(), 3);
    assert_eq!(ok.final_distortion(), 0.1);
    assert_eq!("equal-rate".parse::<ScheduleRule>().unwrap(), ScheduleRule::EqualRate);
    assert_eq!(ScheduleRule::GeometricD.to_string(), "geometric_D");
}

#[test]
fn csv_layout() {
    let one = compare(&build_schedule(1.0, 0.1, 2, 2, ScheduleRule::GeometricD).unwrap());
    let mut buf = Vec::new();
    write_comparisons_csv(&mut buf, std::slice::from_ref(&one)).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(text.lines().count(), 3);

    let ten = compare(&build_schedule(1.0, 0.1, 2, 10, ScheduleRule::GeometricD).unwrap());
    let mut buf = Vec::new();
    write_comparisons_csv(&mut buf, &[one, ten]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("M,stage,"));
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn low_rate_additivity() {
    let grid = default_gamma_grid();
    let sources = [SourceModel::gaussian(0.0, 1.0).unwrap(), MixtureSpec::new(0.5, 1.0, 5.0).unwrap().source()];
    for s in &sources {
        for k in 1..=4 {
            let r = verify_lowrate_additivity(s, k, &grid).unwrap();
            assert!(r.mutual_info_relative_error() < 0.02, "{r:?}");
            assert!(r.inverse_distortion_relative_error() < 0.02, "{r:?}");
        }
    }
    assert!(verify_lowrate_additivity(&sources[0], 0, &grid).is_err());
    assert!(verify_lowrate_additivity(&sources[0], 9, &grid).is_err());
}

proptest! {
    #[test]
    fn unconditional_never_beats_conditional(
        l in 1u32..6,
        ratios in prop::collection::vec(0.05f64..0.95, 1..8),
    ) {
        let mut d = 1.0;
        let targets: Vec<f64> = ratios.iter().map(|r| { d *= r; d }).collect();
        let c = compare(&RefinementSchedule::explicit(1.0, targets, l).unwrap());
        for (u, r) in c.unconditional.iter().zip(&c.conditional) {
            prop_assert!(*u >= r - 1e-12);
        }
    }

    #[test]
    fn gaussian_information_adds(l in 1u32..8, d_prev in 0.05f64..2.0, frac in 0.01f64..1.0) {
        // 1/D = 1/D_prev + L·(1/d − 1/D_prev)
        let d = d_prev * frac;
        let joint = joint_distortion(d, d_prev, l).unwrap();
        let want = 1.0 / d_prev + l as f64 * (1.0 / d - 1.0 / d_prev);
        prop_assert!((1.0 / joint - want).abs() <= 1e-10 * want);
        prop_assert!(joint <= d * (1.0 + 1e-12));
    }

    #[test]
    fn joint_distortion_inverts(l in 1u32..8, d_prev in 0.05f64..2.0, frac in 0.01f64..0.999) {
        let target = d_prev * frac;
        let d = per_description_distortion(target, d_prev, l);
        prop_assert!(d <= d_prev * (1.0 + 1e-12));
        let back = joint_distortion(d.min(d_prev), d_prev, l).unwrap();
        prop_assert!((back - target).abs() <= 1e-10 * target);
    }
}
