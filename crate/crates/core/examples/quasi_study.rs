//! Calibration sweep: quasiadditivity ratios of Whitney-union compacta on the
//! cube counterexample domains, across resolutions.

use fraclab::analysis::{quasiadditivity, whitney_union_family, QuasiMode};
use fraclab::capacity::{CapacitySolver, SolverConfig};
use fraclab::energy::EnergyForm;
use fraclab::geometry::{DomainSpec, EnergyParams, GridDomain, WhitneyDecomposition};

fn main() {
    let cfg = SolverConfig { fft_threshold: 1024, ..Default::default() };
    for (spec, n, s, hs, gens) in [
        (DomainSpec::Square, 2u8, 0.4, vec!["1/32", "1/64", "1/128"], vec![3u32, 4, 5]),
        (DomainSpec::Interval, 1u8, 0.45, vec!["1/64", "1/128", "1/256"], vec![2u32, 3, 4]),
    ] {
        let pr = EnergyParams::new(s, 2.0, n).unwrap();
        println!("== {spec:?} sp={}", pr.sp());
        for h in hs {
            let dom = GridDomain::build(&spec, h.parse().unwrap()).unwrap();
            let dist = dom.distance_field();
            let whitney = WhitneyDecomposition::build(&dom).unwrap();
            let form = EnergyForm::new(dom.clone(), pr);
            let solver = CapacitySolver::with_config(&form, &whitney, cfg);
            let family = whitney_union_family(&whitney, &dist, &gens).unwrap();
            let mut line = format!("h={h:>6}:");
            for (g, probe) in gens.iter().zip(&family) {
                let item = quasiadditivity(
                    &solver,
                    &whitney,
                    &dist,
                    &format!("g{g}"),
                    &probe.set,
                    QuasiMode::Weak,
                )
                .unwrap();
                line += &format!(
                    " g≤{g}: N={:.3} (parts {}, cap {:.4})",
                    item.ratio.unwrap_or(f64::NAN),
                    item.parts,
                    item.capacity
                );
            }
            println!("{line}");
        }
    }
}
