// Update latency as the stream grows. The cost depends on the activation
// width and batch size only, never on how much has been seen.
//
// `cargo run --release --example bench_update -- 1000 10 1000`

use foal::verification::{bench_updates, COST_RATIO_LIMIT};

fn bench(dim: usize, batch: usize, updates: usize) -> Result<(), Box<dyn std::error::Error>> {
    let r = bench_updates(dim, batch, updates, 0)?;
    println!("D = {dim}, S = {batch}, {updates} updates");
    println!("median update:      {:?}", r.median());
    println!("first-decile median {:?}", r.first_decile_median);
    println!("last-decile median  {:?}", r.last_decile_median);
    println!("ratio {:.3} (limit {COST_RATIO_LIMIT})", r.ratio());
    Ok(())
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    bench(128, 10, 200)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    match args[..] {
        [] => run_example(),
        [d, s, n] => bench(d, s, n),
        _ => Err("usage: bench_update [DIM BATCH UPDATES]".into()),
    }
}
