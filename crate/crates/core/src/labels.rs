//! Bounded integer label vectors with saturating covering coordinates.
//!
//! A label space is a box `lo ⪯ I ⪯ hi`. Coordinates flagged `clamp_low`
//! saturate at `lo` when a step would go below it (covering resources); any
//! other coordinate leaving the box makes the step invalid.

/// Box of integer vectors with mixed-radix indexing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSpace {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    pub clamp_low: Vec<bool>,
    radix: Vec<usize>,
    size: usize,
}

impl LabelSpace {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>, clamp_low: Vec<bool>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert_eq!(lo.len(), clamp_low.len());
        let mut radix = Vec::with_capacity(lo.len());
        let mut size = 1usize;
        for (l, h) in lo.iter().zip(&hi) {
            let w = if h >= l { (h - l + 1) as usize } else { 0 };
            radix.push(w);
            size = size.saturating_mul(w);
        }
        LabelSpace {
            lo,
            hi,
            clamp_low,
            radix,
            size,
        }
    }

    /// Number of labels in the box.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        v.len() == self.dims()
            && v.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (l, h))| l <= x && x <= h)
    }

    /// Index of a label; the last coordinate varies fastest.
    pub fn encode(&self, v: &[i64]) -> Option<usize> {
        if !self.contains(v) {
            return None;
        }
        let mut idx = 0usize;
        for (i, x) in v.iter().enumerate() {
            idx = idx * self.radix[i] + (x - self.lo[i]) as usize;
        }
        Some(idx)
    }

    pub fn decode(&self, mut idx: usize) -> Vec<i64> {
        let mut out = vec![0i64; self.dims()];
        for i in (0..self.dims()).rev() {
            let r = self.radix[i];
            out[i] = self.lo[i] + (idx % r) as i64;
            idx /= r;
        }
        out
    }

    /// Apply saturation to a raw vector; `None` if a non-clamped coordinate leaves the box.
    pub fn clamp(&self, v: &[i64]) -> Option<Vec<i64>> {
        let mut out = Vec::with_capacity(v.len());
        for (i, &x) in v.iter().enumerate() {
            let x = if self.clamp_low[i] && x < self.lo[i] {
                self.lo[i]
            } else {
                x
            };
            if x < self.lo[i] || x > self.hi[i] {
                return None;
            }
            out.push(x);
        }
        Some(out)
    }

    /// `clamp(I + delta)` for a label index.
    pub fn step(&self, idx: usize, delta: &[i64]) -> Option<usize> {
        let v = self.decode(idx);
        let sum: Vec<i64> = v.iter().zip(delta).map(|(a, b)| a + b).collect();
        self.clamp(&sum).and_then(|c| self.encode(&c))
    }

    /// Transition table `table[idx] = step(idx, delta)`.
    pub fn step_table(&self, delta: &[i64]) -> Vec<Option<u32>> {
        (0..self.size).map(|i| self.step(i, delta).map(|j| j as u32)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.size).map(move |i| self.decode(i))
    }
}
