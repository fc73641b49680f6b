//! Fit a three-component Gaussian mixture to planted blobs and show the log-likelihood trace,
//! the recovered parameters and the hard assignment.
//!
//! cargo run --example gmm_em

use volclust::gmm::{fit_gmm, hard_assign, GmmOptions};
use volclust::synthetic::planted_blobs;

fn main() -> volclust::Result<()> {
    let centers = vec![vec![-6.0, 0.0], vec![0.0, 4.0], vec![6.0, 0.0]];
    let (data, truth) = planted_blobs(&centers, 120, 1.0, 5)?;
    let fit = fit_gmm(&data, &GmmOptions::new(3))?;

    println!("winning restart {} of {}, converged {}", fit.restart_index, fit.restarts.len(), fit.converged);
    let trace = &fit.log_likelihood_trace;
    for (i, ll) in trace.iter().enumerate().filter(|(i, _)| *i < 5 || *i + 2 >= trace.len()) {
        println!("  iter {i:>3}: log-likelihood {ll:.6}");
    }

    let model = fit.model.canonicalized();
    for i in 0..model.n_components() {
        let c = &model.covariances()[i];
        println!(
            "component {i}: weight {:.3}  mean ({:>6.3}, {:>6.3})  var ({:.3}, {:.3})  cov {:.3}",
            model.weights()[i],
            model.means()[i][0],
            model.means()[i][1],
            c[(0, 0)],
            c[(1, 1)],
            c[(0, 1)]
        );
    }

    let hard = hard_assign(&fit.responsibilities);
    let sizes = hard.clustering.sizes();
    println!("cluster sizes {sizes:?} (planted {} each), compacted {}", truth.len() / 3, hard.compacted);
    println!("max responsibility row error {:.1e}", fit.responsibilities.max_normalization_error());
    Ok(())
}
