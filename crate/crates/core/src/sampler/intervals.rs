use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Equal-tailed posterior interval and mean for one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CredibleInterval {
    pub name: &'static str,
    pub lo: f64,
    pub hi: f64,
    pub mean: f64,
}

impl CredibleInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Sample quantile with linear interpolation between order statistics
/// (position `(n - 1) p`, Hyndman-Fan type 7). `sorted` must be ascending.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Equal-tailed `level` intervals for each of the five parameters.
pub fn credible_intervals(samples: &[ModelParams], level: f64) -> Result<[CredibleInterval; 5]> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "level must be in (0, 1), got {level}"
        )));
    }
    let tail = (1.0 - level) / 2.0;
    Ok(std::array::from_fn(|i| {
        let mut col: Vec<f64> = samples.iter().map(|s| s.to_array()[i]).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        col.sort_by(f64::total_cmp);
        CredibleInterval {
            name: ModelParams::NAMES[i],
            lo: quantile(&col, tail),
            hi: quantile(&col, 1.0 - tail),
            mean,
        }
    }))
}
