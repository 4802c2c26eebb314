use super::{ImageBuffer, ImageryError, RegionMask};

/// 256-bin intensity counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    bins: [u64; 256],
}

impl Histogram {
    pub fn from_bins(bins: [u64; 256]) -> Self {
        Self { bins }
    }

    pub fn from_values(values: impl IntoIterator<Item = u8>) -> Self {
        let mut bins = [0u64; 256];
        for v in values {
            bins[v as usize] += 1;
        }
        Self { bins }
    }

    pub fn bins(&self) -> &[u64; 256] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    pub fn mean(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| {
            self.bins
                .iter()
                .enumerate()
                .map(|(v, &c)| v as f64 * c as f64)
                .sum::<f64>()
                / total as f64
        })
    }
}

/// Histogram of a gray image, optionally restricted to `mask`.
pub fn histogram(img: &ImageBuffer, mask: Option<&RegionMask>) -> Result<Histogram, ImageryError> {
    img.require_channels(1)?;
    let hist = match mask {
        None => Histogram::from_values(img.data().iter().copied()),
        Some(m) => {
            m.check_dims(img.width(), img.height())?;
            Histogram::from_values(m.indices().map(|i| img.data()[i]))
        }
    };
    if hist.total() == 0 {
        return Err(ImageryError::EmptyRegion);
    }
    Ok(hist)
}

/// Smallest occupied intensity whose cumulative count reaches `p × total`.
pub fn percentile(hist: &Histogram, p: f64) -> Result<u8, ImageryError> {
    let total = hist.total();
    if total == 0 {
        return Err(ImageryError::EmptyHistogram);
    }
    let target = p.clamp(0.0, 1.0) * total as f64;
    let mut cumulative = 0u64;
    for (v, &count) in hist.bins.iter().enumerate() {
        cumulative += count;
        if cumulative > 0 && cumulative as f64 >= target {
            return Ok(v as u8);
        }
    }
    Ok(255)
}
