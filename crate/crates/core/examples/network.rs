//! Random geometric graphs, Metropolis weights and max-flooding.
//!
//! Run with `cargo run --example network -- [nodes] [seed]`.

use dinas::dinas::dsf_max;
use dinas::network::{default_radius, metropolis_weights, random_geometric_graph, spectral_gap};

fn main() -> dinas::Result<()> {
    let mut args = std::env::args().skip(1);
    let nodes: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(10);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);

    let radius = default_radius(nodes);
    let topo = random_geometric_graph(nodes, radius, seed)?;
    println!("{nodes} nodes, radius {radius:.3}, {} edges, diameter {}", topo.edges().len(), topo.diameter());
    for i in 0..nodes {
        println!("  node {i:>2}: degree {} -> {:?}", topo.degree(i), topo.neighbors(i));
    }

    let w = metropolis_weights(&topo);
    let info = spectral_gap(&w);
    println!("w_bar = {:.4}, lambda_2 = {:.4}", info.w_bar, info.lambda2);

    let values: Vec<f64> = (0..nodes).map(|i| ((i * 37 + 11) % 17) as f64).collect();
    let out = dsf_max(&values, &topo);
    println!("flooded max {} in {} rounds ({} scalars sent)", out.max, out.rounds, out.scalars_sent);
    Ok(())
}
