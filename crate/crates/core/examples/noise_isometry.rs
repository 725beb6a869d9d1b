//! Sample mean of `‖W(t)‖²` for both noise channels against `Tr Q · t`.

use sll::geometry::Grid1D;
use sll::harness::NoiseConfig;
use sll::noise::{wiener_norms, NoiseModel};
use sll::stats::mean_se;

fn main() -> sll::Result<()> {
    let noise = NoiseConfig::default();
    let model = NoiseModel::new(Grid1D::new(64)?, noise.interior(), noise.boundary(), 0.01)?;
    for t in [0.1, 0.5, 1.0] {
        let norms = wiener_norms(&model, 1, 2000, t)?;
        let w1 = mean_se(&norms.iter().map(|n| n.0).collect::<Vec<_>>());
        let w2 = mean_se(&norms.iter().map(|n| n.1).collect::<Vec<_>>());
        println!(
            "t = {t}: interior {:.4} ± {:.4} (expect {:.4}), boundary {:.4} ± {:.4} (expect {:.4})",
            w1.mean,
            w1.se,
            model.trace_q1() * t,
            w2.mean,
            w2.se,
            model.trace_q2() * t
        );
    }
    Ok(())
}
