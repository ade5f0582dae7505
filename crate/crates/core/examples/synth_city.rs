//! Generate a synthetic city and print what the generator planted.
//!
//! `cargo run --example synth_city -- [out_dir]` also writes the CSV files.

use parkcast::synth::{generate, write_city, SynthConfig};

fn main() -> anyhow::Result<()> {
    let cfg = SynthConfig { n_days: 14, ..SynthConfig::default() };
    let city = generate(&cfg)?;
    let m = &city.manifest;
    println!("{} lots in {} clusters over {} days", city.lots.len(), m.clusters.len(), cfg.n_days);
    println!(
        "{} parking records ({} arrivals turned away), {} coupled + {} background trips",
        m.parking_records, m.rejected_arrivals, m.coupled_trips, m.background_trips
    );
    println!("lag: {}, mean stay {:.2} h", m.lag_distribution, m.mean_stay_hours);
    for c in &m.clusters {
        println!(
            "  cluster {} at ({:>7.0}, {:>7.0}) capacity {:>3} base occupancy {:.2}",
            c.cluster, c.center.x, c.center.y, c.capacity, c.base
        );
    }
    if let Some(dir) = std::env::args().nth(1) {
        write_city(&city, dir.as_ref())?;
        println!("wrote {}", m.files.join(", "));
    }
    Ok(())
}
