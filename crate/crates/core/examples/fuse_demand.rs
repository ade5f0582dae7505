//! Count trip endpoints falling inside one zone's buffer, per mode and
//! ten-minute bin.

use parkcast::experiment::{prepare, ExperimentConfig, Inputs};
use parkcast::ingest::TravelMode;
use parkcast::synth::generate;

fn main() -> anyhow::Result<()> {
    let cfg = ExperimentConfig::from_toml_str("", &["synth.n_days=7".into()])?;
    let city = generate(&cfg.synth)?;
    let prepared = prepare(&Inputs::from_city(&city), &cfg)?;

    for (zone_id, report) in &prepared.fuse_reports {
        println!("{zone_id}: {report:?}");
    }
    let frame = &prepared.frames[0];
    println!("\nzone {} channels: {:?}", frame.zone_id, frame.channel_names());
    let grid = prepared.stage.grid;
    let per_hour = 3600 / grid.step as usize;
    let day = 24 * per_hour;
    for mode in TravelMode::ALL {
        let scale = frame.demand_scale[mode.index()];
        let counts: Vec<f64> = frame.demand_channels[mode.index()].iter().map(|v| v * scale).collect();
        let profile: Vec<f64> = (0..24)
            .map(|h| {
                let bins: Vec<f64> = (0..grid.len).filter(|i| (i % day) / per_hour == h).map(|i| counts[i]).collect();
                bins.iter().sum::<f64>() / bins.len() as f64
            })
            .collect();
        let peak = (0..24).max_by(|a, b| profile[*a].total_cmp(&profile[*b])).unwrap_or(0);
        println!(
            "{:<13} {:>6.0} endpoints, busiest hour {peak:>2}:00",
            mode.as_str(),
            counts.iter().sum::<f64>()
        );
    }
    Ok(())
}
