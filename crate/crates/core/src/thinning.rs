//! Reproducible unit-rate Poisson grain streams on ℝ₊² and the thinning
//! sampler built on them.
//!
//! A stream is split into cells `[wL, (w+1)L) × (bW, (b+1)W]` indexed by a
//! time window `w` and an x-band `b`. Each cell is filled from its own keyed
//! generator on first use, so the grains below any level are the same no
//! matter which consumer asked first or how high it looked.

use rand_distr::{Distribution, Poisson};
use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::rng::{keyed_rng, tag};

/// Time length of one cell.
pub const WINDOW: f64 = 1.0;
/// x-height of one cell.
pub const BAND: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grain {
    pub t: f64,
    pub x: f64,
}

#[derive(Debug, Clone)]
pub struct GrainStream {
    seed: u64,
    stream_id: u64,
    horizon: f64,
    /// cells[w][b], each time-sorted.
    cells: Vec<Vec<Vec<Grain>>>,
}

fn band_count(level: f64) -> usize {
    (level / BAND).ceil().max(0.0) as usize
}

impl GrainStream {
    pub fn new(seed: u64, stream_id: u64, horizon: f64) -> Self {
        GrainStream { seed, stream_id, horizon, cells: Vec::new() }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn fill_cell(&self, w: usize, b: usize) -> Vec<Grain> {
        let mut rng = keyed_rng(&[self.seed, tag::GRAIN, self.stream_id, b as u64, w as u64]);
        let count = Poisson::new(BAND * WINDOW).expect("positive mean").sample(&mut rng) as usize;
        let t0 = w as f64 * WINDOW;
        let x0 = b as f64 * BAND;
        let mut grains: Vec<Grain> = (0..count)
            .map(|_| {
                let t = t0 + WINDOW * rng.random::<f64>();
                let x = x0 + BAND * (1.0 - rng.random::<f64>());
                Grain { t, x }
            })
            .collect();
        grains.sort_by(|a, b| a.t.total_cmp(&b.t));
        grains
    }

    fn ensure(&mut self, w: usize, bands: usize) {
        if self.cells.len() <= w {
            self.cells.resize_with(w + 1, Vec::new);
        }
        let have = self.cells[w].len();
        for b in have..bands {
            let cell = self.fill_cell(w, b);
            self.cells[w].push(cell);
        }
    }

    /// First grain with `after < t ≤ until` and `x ≤ level`.
    pub fn next_grain(&mut self, after: f64, until: f64, level: f64) -> Option<Grain> {
        let until = until.min(self.horizon);
        if !(level > 0.0) || until <= after {
            return None;
        }
        let bands = band_count(level);
        let w_first = (after.max(0.0) / WINDOW).floor() as usize;
        let w_last = (until / WINDOW).floor() as usize;
        for w in w_first..=w_last {
            self.ensure(w, bands);
            let mut best: Option<Grain> = None;
            for cell in &self.cells[w][..bands] {
                let start = cell.partition_point(|g| g.t <= after);
                for g in &cell[start..] {
                    if g.t > until || best.is_some_and(|b| g.t >= b.t) {
                        break;
                    }
                    if g.x <= level {
                        best = Some(*g);
                        break;
                    }
                }
            }
            if best.is_some() {
                return best;
            }
        }
        None
    }

    /// All grains in `[t0, t1] × (0, level]`, time-sorted.
    pub fn grains_in(&mut self, t0: f64, t1: f64, level: f64) -> Result<Vec<Grain>> {
        if !(level > 0.0) {
            return domain(format!("grain level must be > 0, got {level}"));
        }
        if !(t0 >= 0.0) || t1 > self.horizon {
            return domain(format!("grain window [{t0}, {t1}] outside [0, {}]", self.horizon));
        }
        if t1 <= t0 {
            return Ok(Vec::new());
        }
        let bands = band_count(level);
        let mut out: Vec<Grain> = Vec::new();
        for w in (t0 / WINDOW).floor() as usize..=(t1 / WINDOW).floor() as usize {
            self.ensure(w, bands);
            for cell in &self.cells[w][..bands] {
                out.extend(cell.iter().filter(|g| g.t >= t0 && g.t <= t1 && g.x <= level));
            }
        }
        out.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok(out)
    }
}

/// Piecewise-constant dominating rate: `levels[k]` on `(breaks[k], breaks[k+1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseEnvelope {
    breaks: Vec<f64>,
    levels: Vec<f64>,
}

impl PiecewiseEnvelope {
    pub fn new(breaks: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if breaks.len() != levels.len() + 1 || levels.is_empty() {
            return domain("envelope needs len(breaks) = len(levels) + 1 >= 2");
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("envelope breaks must be strictly increasing");
        }
        if levels.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return domain("envelope levels must be finite and >= 0");
        }
        Ok(PiecewiseEnvelope { breaks, levels })
    }

    pub fn constant(level: f64, t0: f64, t1: f64) -> Result<Self> {
        Self::new(vec![t0, t1], vec![level])
    }

    pub fn start(&self) -> f64 {
        self.breaks[0]
    }

    pub fn end(&self) -> f64 {
        self.breaks[self.breaks.len() - 1]
    }

    /// Segment index holding t, with segments half-open on the left.
    fn segment(&self, t: f64) -> usize {
        let k = self.breaks.partition_point(|&b| b < t);
        k.saturating_sub(1).min(self.levels.len() - 1)
    }

    pub fn level_at(&self, t: f64) -> f64 {
        self.levels[self.segment(t)]
    }

    /// Segment covering times just after t.
    fn forward_segment(&self, t: f64) -> usize {
        let k = self.breaks.partition_point(|&b| b <= t);
        k.saturating_sub(1).min(self.levels.len() - 1)
    }
}

/// An accepted grain with the audit pair (intensity, envelope).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accepted {
    pub t: f64,
    pub x: f64,
    pub intensity: f64,
    pub envelope: f64,
}

/// Relative slack allowed in the envelope audit for rounding.
pub const AUDIT_SLACK: f64 = 1e-12;

#[inline]
pub fn audit(intensity: f64, envelope: f64, t: f64) -> Result<()> {
    if intensity.is_nan() || intensity > envelope * (1.0 + AUDIT_SLACK) + AUDIT_SLACK {
        return Err(Error::Envelope(format!(
            "intensity {intensity} exceeds envelope {envelope} at t = {t}"
        )));
    }
    Ok(())
}

/// First grain after `t_now` and up to `horizon` with `x ≤ λ(t)`.
///
/// `intensity` is evaluated at each candidate grain below the envelope.
/// An intensity above the envelope is a hard fault.
pub fn thin_next_event(
    stream: &mut GrainStream,
    t_now: f64,
    horizon: f64,
    envelope: &PiecewiseEnvelope,
    mut intensity: impl FnMut(f64) -> f64,
) -> Result<Option<Accepted>> {
    let horizon = horizon.min(envelope.end()).min(stream.horizon());
    let mut t = t_now.max(envelope.start());
    while t < horizon {
        let k = envelope.forward_segment(t);
        let seg_end = envelope.breaks[k + 1].min(horizon);
        let level = envelope.levels[k];
        match stream.next_grain(t, seg_end, level) {
            None => t = seg_end,
            Some(g) => {
                let lam = intensity(g.t);
                audit(lam, level, g.t)?;
                if g.x <= lam {
                    return Ok(Some(Accepted { t: g.t, x: g.x, intensity: lam, envelope: level }));
                }
                t = g.t;
            }
        }
    }
    Ok(None)
}
