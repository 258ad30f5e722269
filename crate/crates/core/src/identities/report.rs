use serde::Serialize;

/// Absolute floor below which residuals of an all-zero identity count as
/// exact.
pub const ABSOLUTE_FLOOR: f64 = 1e-12;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Outcome of checking one identity at a set of points.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub identity: String,
    pub points: usize,
    pub max_abs_residual: f64,
    pub max_rel_residual: f64,
    /// Largest term magnitude seen over all points.
    pub scale: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Max-reduction of per-point residuals. The relative residual at a point
/// divides by `max(scale, ABSOLUTE_FLOOR / tolerance)`, so identities whose
/// terms all vanish pass exactly when the absolute residual is below the
/// floor.
#[derive(Clone, Debug)]
pub struct Residuals {
    identity: String,
    tolerance: f64,
    points: usize,
    max_abs: f64,
    max_rel: f64,
    scale: f64,
}

impl Residuals {
    pub fn new(identity: &str, tolerance: f64) -> Self {
        Residuals { identity: identity.to_string(), tolerance, points: 0, max_abs: 0.0, max_rel: 0.0, scale: 0.0 }
    }

    /// Record a residual whose terms have magnitude at most `scale`. A point
    /// may contribute several components; call `point()` once per point.
    pub fn record(&mut self, residual: f64, scale: f64) {
        let a = residual.abs();
        let denom = scale.abs().max(ABSOLUTE_FLOOR / self.tolerance);
        let rel = a / denom;
        // NaN must fail the report rather than vanish in the max
        self.max_abs = if a.is_nan() { f64::NAN } else { self.max_abs.max(a) };
        self.max_rel = if rel.is_nan() || self.max_rel.is_nan() { f64::NAN } else { self.max_rel.max(rel) };
        self.scale = self.scale.max(scale.abs());
    }

    /// Record `lhs − rhs` with scale from both sides and any extra terms.
    pub fn compare(&mut self, lhs: f64, rhs: f64, terms: &[f64]) {
        let s = terms.iter().fold(lhs.abs().max(rhs.abs()), |m, t| m.max(t.abs()));
        self.record(lhs - rhs, s);
    }

    pub fn point(&mut self) {
        self.points += 1;
    }

    pub fn finish(self) -> IdentityReport {
        IdentityReport {
            pass: self.max_rel <= self.tolerance,
            identity: self.identity,
            points: self.points,
            max_abs_residual: self.max_abs,
            max_rel_residual: self.max_rel,
            scale: self.scale,
            tolerance: self.tolerance,
            note: None,
        }
    }
}
