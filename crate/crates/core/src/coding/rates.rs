//! Rate bookkeeping of the binning scheme.
//!
//! Per user: `R_Y = R_U + R_k` (codebook = bins x bin size) and
//! `R_U = R_W + R_Z` (bin = sub-bins x sub-bin size).

use serde::{Deserialize, Serialize};

use crate::channel::FullJoint;
use crate::error::{Error, Result};
use crate::region::MiTerms;

/// Identity tolerance between the rate components.
pub const RATE_IDENTITY_TOL: f64 = 1e-12;

/// A user whose `I(U; Y, S)` is below this carries no message.
pub const ACTIVE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserRates {
    pub r_y: f64,
    pub r_k: f64,
    pub r_u: f64,
    pub r_w: f64,
    pub r_z: f64,
}

impl UserRates {
    pub const ZERO: UserRates = UserRates {
        r_y: 0.0,
        r_k: 0.0,
        r_u: 0.0,
        r_w: 0.0,
        r_z: 0.0,
    };

    /// Rates from the three free components.
    pub fn new(r_k: f64, r_w: f64, r_z: f64) -> Self {
        let r_u = r_w + r_z;
        Self {
            r_y: r_u + r_k,
            r_k,
            r_u,
            r_w,
            r_z,
        }
    }

    fn validate(&self, user: usize) -> Result<()> {
        let all = [self.r_y, self.r_k, self.r_u, self.r_w, self.r_z];
        if all.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rates of user {user} must be finite and nonnegative: {self:?}"
            )));
        }
        if (self.r_y - self.r_u - self.r_k).abs() > RATE_IDENTITY_TOL {
            return Err(Error::InvalidParameter(format!("user {user}: R_Y != R_U + R_{user}")));
        }
        if (self.r_u - self.r_w - self.r_z).abs() > RATE_IDENTITY_TOL {
            return Err(Error::InvalidParameter(format!("user {user}: R_U != R_W + R_Z")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinningRates {
    pub user1: UserRates,
    pub user2: UserRates,
}

impl BinningRates {
    pub fn users(&self) -> [UserRates; 2] {
        [self.user1, self.user2]
    }

    pub fn validate(&self) -> Result<()> {
        self.user1.validate(1)?;
        self.user2.validate(2)
    }

    /// The same bins and sub-bin counts with one codeword per sub-bin.
    pub fn without_sub_bins(&self) -> Self {
        let strip = |u: UserRates| UserRates::new(u.r_k, u.r_w, 0.0);
        Self {
            user1: strip(self.user1),
            user2: strip(self.user2),
        }
    }
}

fn infeasible(constraint: &str, margin: f64) -> Error {
    Error::Infeasible(format!("{constraint} cannot hold with margin {margin} bits"))
}

/// Rates that sit `margin` inside every constraint of the binning scheme:
///
/// - `R_Uk > max(I(Uk;Z), I(Uk;S1,S2))`
/// - `R_U1 + R_U2 > I(U1;U2) + I(U1,U2;S1,S2)`
/// - `R_Yk < I(Uk;Yk,Sk)`
/// - `R_Zk < I(Uk;Z)` and `R_Z1 + R_Z2 < I(U1;U2) + I(U1,U2;Z)`
///
/// A sub-bin rate whose limit is already zero stays at zero. A user with
/// `I(Uk;Yk,Sk)` below [`ACTIVE_TOL`] is given zero rates throughout.
pub fn derive_rates(j: &FullJoint, margin: f64) -> Result<BinningRates> {
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(Error::InvalidParameter("margin must be positive".into()));
    }
    let t = MiTerms::of(j);
    let main = [t.u1_y1s1, t.u2_y2s2];
    let to_z = [t.u1_z, t.u2_z];
    let to_s = [t.u1_s, t.u2_s];
    let active = [main[0] > ACTIVE_TOL, main[1] > ACTIVE_TOL];

    let mut r_u = [0.0; 2];
    for k in 0..2 {
        if active[k] {
            r_u[k] = to_z[k].max(to_s[k]) + margin;
        }
    }
    let need = t.u1_u2 + t.u12_s + margin;
    let n_active = active.iter().filter(|a| **a).count();
    if n_active > 0 && r_u[0] + r_u[1] < need {
        let share = (need - r_u[0] - r_u[1]) / n_active as f64;
        for k in 0..2 {
            if active[k] {
                r_u[k] += share;
            }
        }
    }

    let mut r_z = [0.0; 2];
    for k in 0..2 {
        if active[k] {
            r_z[k] = (to_z[k] - margin).max(0.0);
        }
    }
    let cap = (t.u1_u2 + t.u12_z - margin).max(0.0);
    if r_z[0] + r_z[1] > cap {
        let scale = cap / (r_z[0] + r_z[1]);
        r_z.iter_mut().for_each(|r| *r *= scale);
    }

    let mut users = [UserRates::ZERO; 2];
    for k in 0..2 {
        if !active[k] {
            continue;
        }
        let r_y = main[k] - margin;
        let r_k = r_y - r_u[k];
        if r_k <= 0.0 {
            let sum_binding = r_u[k] > to_z[k].max(to_s[k]) + margin + 1e-15;
            let which = if sum_binding {
                "R_U1 + R_U2 > I(U1;U2) + I(U1,U2;S1,S2) together with R_Y < I(U;Y,S)".to_string()
            } else {
                format!(
                    "R_Y{} = R_U{} + R_{} < I(U{};Y{},S{})",
                    k + 1,
                    k + 1,
                    k + 1,
                    k + 1,
                    k + 1,
                    k + 1
                )
            };
            return Err(infeasible(&which, margin));
        }
        users[k] = UserRates {
            r_y,
            r_k,
            r_u: r_u[k],
            r_w: r_u[k] - r_z[k],
            r_z: r_z[k],
        };
    }
    let rates = BinningRates {
        user1: users[0],
        user2: users[1],
    };
    rates.validate()?;
    Ok(rates)
}
