use opticnot::experiment::{bell_tomo_experiment, truth_table_experiment, RateModel};
use opticnot::protocol::NoiseConfig;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let exp = truth_table_experiment(&NoiseConfig::CALIBRATED, &RateModel::default(), 14400.0, 1000, 7).unwrap();
    println!("truth table: analytic {:.4}, sampled {:.4} ± {:.4} ({:?})", exp.analytic_overlap, exp.estimated_overlap, exp.overlap_std, t0.elapsed());

    let t0 = Instant::now();
    let tomo = bell_tomo_experiment(&NoiseConfig::CALIBRATED, &RateModel::default(), 14400.0, 1000, 9).unwrap();
    for b in &tomo.branches {
        println!("branch {:?}/{:?}: fidelity {:.4} ± {:.4} (analytic {:.4})", b.ancilla1, b.ancilla2, b.fidelity, b.fidelity_std, b.analytic_fidelity);
    }
    println!("bell tomo, 1000 MC samples: {:?}", t0.elapsed());
}
