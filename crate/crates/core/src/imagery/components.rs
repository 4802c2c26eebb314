use super::RegionMask;

/// Inclusive pixel bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BoundingBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BoundingBox {
    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Component {
    /// 1-based label as stored in [`ComponentLabels::labels`].
    pub label: u32,
    pub pixel_count: usize,
    pub bbox: BoundingBox,
}

/// Per-pixel labels (0 = background) plus component summaries.
#[derive(Clone, Debug)]
pub struct ComponentLabels {
    pub labels: Vec<u32>,
    pub components: Vec<Component>,
}

/// 8-connected labeling by breadth-first flood fill in raster order.
pub fn label_components(mask: &RegionMask) -> ComponentLabels {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![0u32; w * h];
    let mut components = Vec::new();
    let mut queue = Vec::new();
    for start in 0..w * h {
        if !mask.get_index(start) || labels[start] != 0 {
            continue;
        }
        let label = components.len() as u32 + 1;
        labels[start] = label;
        queue.clear();
        queue.push(start);
        let mut head = 0;
        let (sx, sy) = (start % w, start / w);
        let mut bbox = BoundingBox {
            x0: sx,
            y0: sy,
            x1: sx,
            y1: sy,
        };
        while head < queue.len() {
            let i = queue[head];
            head += 1;
            let (x, y) = (i % w, i / w);
            bbox.x0 = bbox.x0.min(x);
            bbox.x1 = bbox.x1.max(x);
            bbox.y0 = bbox.y0.min(y);
            bbox.y1 = bbox.y1.max(y);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if mask.get_index(j) && labels[j] == 0 {
                        labels[j] = label;
                        queue.push(j);
                    }
                }
            }
        }
        components.push(Component {
            label,
            pixel_count: queue.len(),
            bbox,
        });
    }
    ComponentLabels { labels, components }
}

pub fn connected_components(mask: &RegionMask) -> Vec<Component> {
    label_components(mask).components
}

/// Drop every 8-connected component smaller than `min_size` pixels.
pub fn remove_small_components(mask: &RegionMask, min_size: usize) -> RegionMask {
    if min_size <= 1 {
        return mask.clone();
    }
    let labeled = label_components(mask);
    let keep: Vec<bool> = labeled
        .components
        .iter()
        .map(|c| c.pixel_count >= min_size)
        .collect();
    let bits = labeled
        .labels
        .iter()
        .map(|&l| l != 0 && keep[l as usize - 1])
        .collect();
    RegionMask::from_bits(mask.width(), mask.height(), bits)
}
