//! The Delisi tumor-immune vector fields.
//!
//! The canonical form is the polynomial system obtained from the original
//! fractional-power model by `ybar = y^3` and the time rescaling
//! `dt/dtbar = 1 + x`:
//!
//! ```text
//! x' = -l1 x (1 + x) + a1 (1 - x/xc) x y^2
//! y' =  l2 (1 + x) y - a2 x
//! ```
//!
//! The original field is kept only for validating that change of variables.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five positive model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub xc: f64,
}

#[derive(Deserialize)]
struct RawParams {
    lambda1: f64,
    lambda2: f64,
    alpha1: f64,
    alpha2: f64,
    xc: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.lambda1, r.lambda2, r.alpha1, r.alpha2, r.xc)
    }
}

/// Reference parameters: the Takens-Bogdanov point for alpha1 = 0.297312, alpha2 = 0.00318, xc = 2500.
pub const REFERENCE_PARAMS: ModelParams = ModelParams {
    lambda1: 0.01,
    lambda2: 0.006672,
    alpha1: 0.297312,
    alpha2: 0.00318,
    xc: 2500.0,
};

impl Default for ModelParams {
    fn default() -> Self {
        REFERENCE_PARAMS
    }
}

impl ModelParams {
    pub fn new(lambda1: f64, lambda2: f64, alpha1: f64, alpha2: f64, xc: f64) -> Result<Self> {
        let p = ModelParams {
            lambda1,
            lambda2,
            alpha1,
            alpha2,
            xc,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("xc", self.xc),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// `psi = l1 l2^2 / (a1 a2^2)`.
    pub fn psi(&self) -> f64 {
        self.lambda1 * self.lambda2 * self.lambda2 / (self.alpha1 * self.alpha2 * self.alpha2)
    }

    /// `lambda = l2 / l1`.
    pub fn lambda(&self) -> f64 {
        self.lambda2 / self.lambda1
    }

    pub fn get(&self, id: ParamId) -> f64 {
        match id {
            ParamId::Lambda1 => self.lambda1,
            ParamId::Lambda2 => self.lambda2,
            ParamId::Alpha1 => self.alpha1,
            ParamId::Alpha2 => self.alpha2,
            ParamId::Xc => self.xc,
        }
    }

    pub fn with(&self, id: ParamId, value: f64) -> ModelParams {
        let mut p = *self;
        match id {
            ParamId::Lambda1 => p.lambda1 = value,
            ParamId::Lambda2 => p.lambda2 = value,
            ParamId::Alpha1 => p.alpha1 = value,
            ParamId::Alpha2 => p.alpha2 = value,
            ParamId::Xc => p.xc = value,
        }
        p
    }

    /// Rebuild `(lambda1, lambda2)` from the composites `(psi, lambda)` with the
    /// gauge `(alpha1, alpha2, xc)` held fixed:
    /// `l1 = (psi a1 a2^2 / lambda^2)^(1/3)`, `l2 = lambda l1`.
    pub fn from_composites(psi: f64, lambda: f64, alpha1: f64, alpha2: f64, xc: f64) -> Result<Self> {
        if !(psi > 0.0 && lambda > 0.0) {
            return Err(Error::Domain(format!(
                "composites must be positive (psi = {psi}, lambda = {lambda})"
            )));
        }
        let l1 = (psi * alpha1 * alpha2 * alpha2 / (lambda * lambda)).cbrt();
        ModelParams::new(l1, lambda * l1, alpha1, alpha2, xc)
    }

    /// The polynomial field with no finiteness checks.
    #[inline]
    pub fn field(&self, x: f64, y: f64) -> [f64; 2] {
        [
            -self.lambda1 * x * (1.0 + x) + self.alpha1 * (1.0 - x / self.xc) * x * y * y,
            self.lambda2 * (1.0 + x) * y - self.alpha2 * x,
        ]
    }

    /// Exact Jacobian of the polynomial field.
    #[inline]
    pub fn jac(&self, x: f64, y: f64) -> Matrix2<f64> {
        let ModelParams {
            lambda1: l1,
            lambda2: l2,
            alpha1: a1,
            alpha2: a2,
            xc,
        } = *self;
        Matrix2::new(
            -l1 * (1.0 + 2.0 * x) + a1 * (1.0 - 2.0 * x / xc) * y * y,
            2.0 * a1 * x * y * (1.0 - x / xc),
            l2 * y - a2,
            l2 * (1.0 + x),
        )
    }

    /// Derivative of the polynomial field with respect to one parameter.
    pub fn field_param_derivative(&self, id: ParamId, x: f64, y: f64) -> [f64; 2] {
        match id {
            ParamId::Lambda1 => [-x * (1.0 + x), 0.0],
            ParamId::Lambda2 => [0.0, (1.0 + x) * y],
            ParamId::Alpha1 => [(1.0 - x / self.xc) * x * y * y, 0.0],
            ParamId::Alpha2 => [0.0, -x],
            ParamId::Xc => [self.alpha1 * x * x * y * y / (self.xc * self.xc), 0.0],
        }
    }
}

/// Identifier of a single model parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamId {
    Lambda1,
    Lambda2,
    Alpha1,
    Alpha2,
    Xc,
}

impl std::str::FromStr for ParamId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda1" => Ok(ParamId::Lambda1),
            "lambda2" => Ok(ParamId::Lambda2),
            "alpha1" => Ok(ParamId::Alpha1),
            "alpha2" => Ok(ParamId::Alpha2),
            "xc" => Ok(ParamId::Xc),
            other => Err(Error::Config(format!("unknown parameter '{other}'"))),
        }
    }
}

/// A point of the scaled phase plane (`y` is the cube root of the original
/// tumor variable).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
}

impl State {
    pub const fn new(x: f64, y: f64) -> Self {
        State { x, y }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn from_array(a: [f64; 2]) -> Self {
        State { x: a[0], y: a[1] }
    }

    /// Region of interest `0 < x < xc`, `0 < y`.
    pub fn in_roi(&self, xc: f64) -> bool {
        self.x > 0.0 && self.x < xc && self.y > 0.0
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Anything that defines an autonomous planar vector field.
pub trait PlanarSystem {
    fn field(&self, u: [f64; 2]) -> [f64; 2];

    /// Central-difference Jacobian; implementors with a closed form override it.
    fn jacobian(&self, u: [f64; 2]) -> Matrix2<f64> {
        let mut j = Matrix2::zeros();
        for k in 0..2 {
            let h = 1e-6 * (1.0 + u[k].abs());
            let mut up = u;
            let mut um = u;
            up[k] += h;
            um[k] -= h;
            let fp = self.field(up);
            let fm = self.field(um);
            for i in 0..2 {
                j[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        j
    }
}

impl PlanarSystem for ModelParams {
    #[inline]
    fn field(&self, u: [f64; 2]) -> [f64; 2] {
        ModelParams::field(self, u[0], u[1])
    }

    fn jacobian(&self, u: [f64; 2]) -> Matrix2<f64> {
        self.jac(u[0], u[1])
    }
}

/// Adapter turning a closure into a [`PlanarSystem`].
pub struct FnSystem<F>(pub F);

impl<F: Fn([f64; 2]) -> [f64; 2]> PlanarSystem for FnSystem<F> {
    fn field(&self, u: [f64; 2]) -> [f64; 2] {
        (self.0)(u)
    }
}

/// Right-hand side of the polynomial system.
pub fn eval_polynomial_field(params: &ModelParams, s: State) -> Result<[f64; 2]> {
    if !s.is_finite() {
        return Err(Error::Domain(format!("non-finite state ({}, {})", s.x, s.y)));
    }
    Ok(params.field(s.x, s.y))
}

/// Right-hand side of the original model with the fractional power
/// `y^(2/3)`; `s.y` is the original (unscaled) tumor variable here.
pub fn eval_original_field(params: &ModelParams, s: State) -> Result<[f64; 2]> {
    if !s.is_finite() {
        return Err(Error::Domain(format!("non-finite state ({}, {})", s.x, s.y)));
    }
    if s.y <= 0.0 {
        return Err(Error::Domain(format!(
            "original field is not Lipschitz at y <= 0 (y = {})",
            s.y
        )));
    }
    let ModelParams {
        lambda1: l1,
        lambda2: l2,
        alpha1: a1,
        alpha2: a2,
        xc,
    } = *params;
    let (x, y) = (s.x, s.y);
    let y23 = y.cbrt().powi(2);
    Ok([
        -l1 * x + a1 * x * y23 / (1.0 + x) * (1.0 - x / xc),
        l2 * y - a2 * x * y23 / (1.0 + x),
    ])
}

/// `(1 + x) T(F(x, y^3))` where `F` is the original field and `T` divides the
/// second component by `3 y^2`: the original velocity expressed in the
/// polynomial coordinates and time. Requires `y > 0`.
pub fn pulled_back_original_field(params: &ModelParams, s: State) -> Result<[f64; 2]> {
    let v = eval_original_field(params, State::new(s.x, s.y.powi(3)))?;
    let k = 1.0 + s.x;
    Ok([k * v[0], k * v[1] / (3.0 * s.y * s.y)])
}

impl ModelParams {
    /// Parameters of the original model whose pulled-back field equals this
    /// polynomial field. The cube-root substitution contributes a factor 1/3
    /// to the tumor equation only, absorbed here as `(3 l2, 3 a2)`; the
    /// composites `psi` and `lambda` of the two parameter sets differ.
    pub fn original_equivalent(&self) -> ModelParams {
        ModelParams {
            lambda2: 3.0 * self.lambda2,
            alpha2: 3.0 * self.alpha2,
            ..*self
        }
    }
}

pub fn jacobian(params: &ModelParams, s: State) -> Matrix2<f64> {
    params.jac(s.x, s.y)
}

pub fn composite_params(params: &ModelParams) -> (f64, f64) {
    (params.psi(), params.lambda())
}

/// Exact Taylor expansion of the polynomial field about `base_point`:
///
/// ```text
/// x1' = a0 + a1 x1 + a2 y1 + a3 x1^2 + a4 y1^2 + a5 x1 y1
///          + a6 x1 y1^2 + a7 x1^2 y1 + a8 x1^2 y1^2
/// y1' = b0 + b1 x1 + b2 y1 + b3 x1 y1
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorCoefficients {
    pub a: [f64; 9],
    pub b: [f64; 4],
    pub base_point: State,
}

impl TaylorCoefficients {
    /// Evaluates the expansion at displacement `(dx, dy)` from the base point.
    pub fn eval(&self, dx: f64, dy: f64) -> [f64; 2] {
        let a = &self.a;
        let b = &self.b;
        [
            a[0] + a[1] * dx
                + a[2] * dy
                + a[3] * dx * dx
                + a[4] * dy * dy
                + a[5] * dx * dy
                + a[6] * dx * dy * dy
                + a[7] * dx * dx * dy
                + a[8] * dx * dx * dy * dy,
            b[0] + b[1] * dx + b[2] * dy + b[3] * dx * dy,
        ]
    }

    /// The linear part as a matrix `[[a1, a2], [b1, b2]]`.
    pub fn linear_part(&self) -> Matrix2<f64> {
        Matrix2::new(self.a[1], self.a[2], self.b[1], self.b[2])
    }

    /// The nonlinear remainder `H(x1, y1)` (everything above first order).
    pub fn nonlinear(&self, dx: f64, dy: f64) -> [f64; 2] {
        let a = &self.a;
        [
            a[3] * dx * dx
                + a[4] * dy * dy
                + a[5] * dx * dy
                + a[6] * dx * dy * dy
                + a[7] * dx * dx * dy
                + a[8] * dx * dx * dy * dy,
            self.b[3] * dx * dy,
        ]
    }
}

pub fn taylor_expand(params: &ModelParams, base: State) -> TaylorCoefficients {
    let ModelParams {
        lambda1: l1,
        lambda2: l2,
        alpha1: a1,
        alpha2: a2,
        xc,
    } = *params;
    let (x0, y0) = (base.x, base.y);
    let [a0, b0] = params.field(x0, y0);
    let a = [
        a0,
        // The decay coefficient here is lambda1 (the first-equation rate).
        -l1 * (1.0 + 2.0 * x0) + a1 * (1.0 - 2.0 * x0 / xc) * y0 * y0,
        2.0 * a1 * x0 * y0 * (1.0 - x0 / xc),
        -l1 - a1 * y0 * y0 / xc,
        a1 * x0 * (1.0 - x0 / xc),
        2.0 * a1 * y0 * (1.0 - 2.0 * x0 / xc),
        a1 * (1.0 - 2.0 * x0 / xc),
        -2.0 * a1 * y0 / xc,
        -a1 / xc,
    ];
    let b = [b0, l2 * y0 - a2, l2 * (1.0 + x0), l2];
    TaylorCoefficients { a, b, base_point: base }
}
