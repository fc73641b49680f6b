//! Train a 1x3 self-organizing map on planted blobs, then a 3x3 map, and dump unit weights.
//!
//! cargo run --example som_train

use volclust::som::{assign_som, fit_som, quantization_error, train_som, SomSchedule};
use volclust::synthetic::planted_blobs;

fn main() -> volclust::Result<()> {
    let centers = vec![vec![0.0, 0.0], vec![10.0, 0.0], vec![5.0, 9.0]];
    let (data, _) = planted_blobs(&centers, 100, 0.8, 9)?;

    let line = fit_som(&data, 1, 3, &SomSchedule::for_shape(1, 3), 5, 42)?;
    println!("1x3 map, restart {} wins with quantization error {:.4}", line.restart_index, line.quantization_error);
    let mut csv = Vec::new();
    line.grid.write_csv(&mut csv).expect("in-memory write");
    print!("{}", String::from_utf8_lossy(&csv));
    let assignment = assign_som(&line.grid, &data)?;
    println!("cluster sizes {:?}\n", assignment.clustering.sizes());

    let grid = train_som(&data, 3, 3, &SomSchedule::for_shape(3, 3), 42)?;
    let assignment = assign_som(&grid, &data)?;
    println!(
        "3x3 map: quantization error {:.4}, {} of 9 units used (compacted {})",
        quantization_error(&grid, &data)?,
        assignment.clustering.k(),
        assignment.compacted
    );
    Ok(())
}
