//! Cluster lots into parking cluster zones and score the result against the
//! generator's labels.

use parkcast::eval::adjusted_rand_index;
use parkcast::experiment::{prepare, ExperimentConfig, Inputs};
use parkcast::synth::generate;

fn main() -> anyhow::Result<()> {
    let cfg = ExperimentConfig::from_toml_str("", &["synth.n_days=14".into()])?;
    let city = generate(&cfg.synth)?;
    let prepared = prepare(&Inputs::from_city(&city), &cfg)?;
    let stage = &prepared.stage;

    println!("k-means: {} iterations, inertia {:.3}", stage.iterations, stage.inertia);
    for zone in &stage.zones {
        let (lo, hi) = zone.bounding_box();
        println!(
            "{} {:>2} lots, buffer {:.0} m (p = {}), box ({:.0}, {:.0})-({:.0}, {:.0})",
            zone.zone_id,
            zone.len(),
            zone.radius,
            zone.p,
            lo.x,
            lo.y,
            hi.x,
            hi.y
        );
    }
    let truth: Vec<usize> = stage.lot_features.iter().map(|l| city.manifest.labels[&l.lot_id]).collect();
    println!("adjusted Rand index vs planted clusters: {:.3}", adjusted_rand_index(&stage.assignments, &truth)?);
    println!("train zones {:?}", stage.split.train_zones);
    println!("test zones  {:?}", stage.split.test_zones);
    Ok(())
}
