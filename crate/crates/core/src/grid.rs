use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `min, min+step, …` up to `max`. The endpoint is included
/// when it lies within half a step of the last node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        let g = Self { min, max, step };
        g.validate()?;
        Ok(g)
    }

    /// A one-point grid.
    pub fn point(x: f64) -> Self {
        Self {
            min: x,
            max: x,
            step: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidInput("grid bounds must be finite".into()));
        }
        if self.step <= 0.0 {
            return Err(Error::InvalidInput(format!("grid step must be positive, got {}", self.step)));
        }
        if self.max < self.min {
            return Err(Error::InvalidInput(format!(
                "grid max {} is below min {}",
                self.max, self.min
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.max - self.min) / self.step + 0.5).floor() as usize + 1
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let x = self.min + k as f64 * self.step;
                // land exactly on the endpoint instead of min + k·step round-off
                if k + 1 == self.len() && (x - self.max).abs() <= 0.5 * self.step * (1.0 + 1e-9) {
                    self.max
                } else {
                    x
                }
            })
            .collect()
    }

    /// Parses `min:max:step`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!("grid `{spec}` is not min:max:step")));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad number `{s}` in grid `{spec}`")))
        };
        Self::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }
}

/// Fails unless `xs` is strictly increasing.
pub fn ensure_monotone(xs: &[f64]) -> Result<()> {
    if let Some(w) = xs.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(format!(
            "grid is not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusive_endpoints() {
        let g = Grid::parse("-3:3:0.5").unwrap();
        let p = g.points();
        assert_eq!(p.len(), 13);
        assert_eq!(p[0], -3.0);
        assert_eq!(p[12], 3.0);
        assert_eq!(p[6], 0.0);
        assert_eq!(Grid::new(-3.0, 3.0, 0.01).unwrap().len(), 601);
    }

    #[test]
    fn endpoint_within_half_step() {
        // the last node always lands on max
        let p = Grid::new(0.0, 1.0, 0.4).unwrap().points();
        assert_eq!(p.len(), 4);
        assert_eq!(*p.last().unwrap(), 1.0);
        let p = Grid::new(0.0, 1.0, 0.3).unwrap().points();
        assert_eq!(p.len(), 4);
        assert!((p[2] - 0.6).abs() < 1e-15);
        assert_eq!(p[3], 1.0);
        let p = Grid::new(0.0, 1.0, 0.45).unwrap().points();
        assert_eq!(p.len(), 3);
        assert_eq!(p[2], 1.0);
        let p = Grid::new(-2.0, 2.0, 0.1).unwrap().points();
        assert_eq!(p.len(), 41);
        assert_eq!(p[40], 2.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::parse("0:1").is_err());
        assert!(Grid::parse("0:1:0").is_err());
        assert!(Grid::parse("1:0:0.1").is_err());
        assert!(Grid::parse("a:1:0.1").is_err());
        assert!(ensure_monotone(&[0.0, 1.0, 1.0]).is_err());
        assert!(ensure_monotone(&[]).is_ok());
    }

    #[test]
    fn single_point() {
        assert_eq!(Grid::point(0.25).points(), vec![0.25]);
    }
}
