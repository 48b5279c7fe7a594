use adlc_core::*;
use proptest::prelude::*;

const G0: f64 = 28.9;

/// Dense grid scan of P(V) on [0, V_oc] followed by repeated local re-gridding.
/// Shares nothing with the golden-section search beyond the diode equation.
fn grid_mpp(pv: &PvPanel, g: f64, points: usize) -> (f64, f64) {
    let voc = pv.open_circuit_voltage(g).unwrap();
    let p = |v: f64| pv.power_at(g, v).unwrap();
    let (mut lo, mut hi) = (0.0, voc);
    let mut best = (0.0, 0.0);
    let mut n = points;
    for _ in 0..6 {
        let h = (hi - lo) / n as f64;
        best = (0..=n)
            .map(|i| {
                let v = lo + h * i as f64;
                (v, p(v))
            })
            .fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        lo = (best.0 - h).max(0.0);
        hi = (best.0 + h).min(voc);
        n = 1000;
    }
    best
}

fn sign_changes(values: &[f64]) -> usize {
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).filter(|d| *d != 0.0).collect();
    diffs.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count()
}

#[test]
fn laser_power_is_affine_above_threshold() {
    let laser = LaserDiode::default();
    let slope = laser.slope_efficiency();
    for i_t in [0.1, 0.7, 2.5] {
        let h = 1e-3;
        let fd = (laser.laser_power(i_t + h).unwrap() - laser.laser_power(i_t - h).unwrap()) / (2.0 * h);
        assert!((fd - slope).abs() <= 1e-9 * slope, "slope at {i_t}: {fd}");
    }
}

proptest! {
    #[test]
    fn laser_round_trip(p in 0.0f64..1e3) {
        let laser = LaserDiode::default();
        let back = laser.laser_power(laser.stimulation_current_for_power(p).unwrap()).unwrap();
        prop_assert!((back - p).abs() <= 1e-12 * p.max(1e-300));
    }

    #[test]
    fn laser_power_nonnegative_and_zero_below_threshold(i in 0.0f64..5.0) {
        let laser = LaserDiode::default();
        let p = laser.laser_power(i).unwrap();
        prop_assert!(p >= 0.0);
        if i <= laser.threshold_current_a { prop_assert_eq!(p, 0.0); }
    }

    #[test]
    fn beam_density_bijection(d in 0.0f64..1e4, area in 1e-3f64..1e3) {
        let beam = Beam { area_cm2: area };
        let p = beam.power_from_density(d);
        prop_assert_eq!(p, d * area);
        prop_assert!((beam.density_from_power(p) - d).abs() <= 1e-12 * d.max(1e-300));
    }

    #[test]
    fn output_current_monotone(g in 0.5f64..500.0, frac in 0.0f64..0.98, dv in 1e-3f64..0.02) {
        let pv = PvPanel::default();
        let voc = pv.open_circuit_voltage(g).unwrap();
        let v = frac * voc;
        let i0 = pv.output_current(g, v).unwrap();
        prop_assert!(pv.output_current(g, v + dv * voc).unwrap() < i0);
        prop_assert!(pv.output_current(g * 1.01, v).unwrap() > i0);
    }

    #[test]
    fn dcdc_is_linear(v in 0.0f64..10.0, i in 0.0f64..2.0, eta in 0.5f64..1.0) {
        let base = dcdc_required_input_power(&Setpoint::new(v, i), &DcDc { efficiency: eta });
        let doubled = dcdc_required_input_power(&Setpoint::new(v, 2.0 * i), &DcDc { efficiency: eta });
        prop_assert!((doubled - 2.0 * base).abs() <= 1e-15 * base.max(1e-300) * 4.0);
        prop_assert!((base * eta - v * i).abs() <= 1e-12 * (v * i).max(1e-300));
    }
}

#[test]
fn power_curve_is_unimodal() {
    let pv = PvPanel::default();
    for k in 0..5 {
        let g = G0 * 10f64.powf(-1.0 + 0.5 * k as f64);
        let voc = pv.open_circuit_voltage(g).unwrap();
        let scan: Vec<f64> = (0..10_000).map(|i| pv.power_at(g, voc * i as f64 / 9_999.0).unwrap()).collect();
        assert_eq!(sign_changes(&scan), 1, "G = {g}");
    }
}

#[test]
fn mpp_agrees_with_grid_oracle() {
    let pv = PvPanel::default();
    for g in [2.89, G0, 97.0, 289.0] {
        let (_, p_grid) = grid_mpp(&pv, g, 1_000_000);
        let mpp = pv.find_mpp(g).unwrap();
        assert!((mpp.power - p_grid).abs() <= 1e-12 * p_grid, "G={g}: {} vs {}", mpp.power, p_grid);
        assert_eq!(mpp.power, mpp.voltage * mpp.current);
        assert!(mpp.voltage <= pv.open_circuit_voltage(g).unwrap());
    }
}

#[test]
fn mpp_power_increases_with_irradiance() {
    let pv = PvPanel::default();
    let powers: Vec<f64> = (0..20).map(|i| pv.find_mpp(0.5 * 1.4f64.powi(i)).unwrap().power).collect();
    assert!(powers.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn inverse_mppt_round_trip_grid() {
    let pv = PvPanel::default();
    for i in 0..20 {
        let g = 0.5 * 1.5f64.powi(i);
        let back = pv.irradiance_for_power(pv.find_mpp(g).unwrap().power, 1e4).unwrap();
        assert!((back - g).abs() <= 1e-5 * g, "G={g} -> {back}");
    }
}

#[test]
fn end_to_end_chain_reproduces_setpoint_power() {
    let pv = PvPanel::default();
    let laser = LaserDiode::default();
    let beam = Beam { area_cm2: 0.5 };
    let mppt = MpptSettings::default();
    for (v, i) in [(2.9, 0.01), (3.3, 0.1), (4.2, 0.6), (4.2, 1.0)] {
        let sp = Setpoint::new(v, i);
        let msg = monitor_compute_feedback(&sp, &pv, &mppt, &DcDc::default(), &beam, 1, 0.0).unwrap();
        assert!((msg.desired_laser_power_w / beam.area_cm2 - msg.desired_power_density_w_per_cm2).abs()
            <= 1e-12 * msg.desired_power_density_w_per_cm2);
        let current = controller_apply(&msg, &laser).unwrap();
        let emitted = laser.laser_power(current).unwrap();
        let delivered = pv.find_mpp(beam.density_from_power(emitted)).unwrap().power;
        assert!((delivered - v * i).abs() <= 1e-5 * v * i, "{v} V {i} A: {delivered}");
    }
}

#[test]
fn leading_order_examples_hold_under_that_form() {
    let pv = PvPanel { saturation_form: SaturationForm::LeadingOrder, ..PvPanel::default() };
    assert!((pv.saturation_current() - 0.05134).abs() < 5e-6);
    assert!((pv.output_current(G0, 3.0).unwrap() - 0.0982).abs() < 5e-5);
    let mpp = pv.find_mpp(G0).unwrap();
    assert!((mpp.voltage - 4.68).abs() < 0.01);
    assert!((mpp.power - 0.35).abs() < 0.005);
}
