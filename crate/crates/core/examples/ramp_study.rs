//! Calibration sweep: boundary-ramp energies vs ramp width on the square and the
//! interval, across grid resolutions.

use fraclab::energy::{EnergyForm, GridFunction};
use fraclab::geometry::{DomainSpec, EnergyParams, GridDomain};

fn main() {
    for (spec, n, s, hs) in [
        (DomainSpec::Square, 2u8, 0.4, vec!["1/32", "1/64", "1/128"]),
        (DomainSpec::Interval, 1u8, 0.45, vec!["1/128", "1/256", "1/512"]),
    ] {
        let pr = EnergyParams::new(s, 2.0, n).unwrap();
        println!("== {spec:?} sp={}", pr.sp());
        for h in hs {
            let dom = GridDomain::build(&spec, h.parse().unwrap()).unwrap();
            let dist = dom.distance_field();
            let form = EnergyForm::new(dom.clone(), pr);
            let mut line = format!("h={h:>6}:");
            for k in 1..=6 {
                let delta = 2f64.powi(-k);
                let u = GridFunction::new(
                    dom.clone(),
                    dist.values().iter().map(|&d| (d / delta).min(1.0)).collect(),
                );
                line += &format!(" δ=1/{:<3} E={:<9.4}", 1 << k, form.seminorm_p(&u));
            }
            println!("{line}");
        }
    }
}
