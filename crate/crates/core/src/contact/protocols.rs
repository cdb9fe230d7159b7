use std::f64::consts::FRAC_PI_2;
use std::fmt::Debug;

use crate::collision::CollisionSetup;
use crate::error::{Error, Result};
use crate::linalg::{identity, partial_trace, swap_operator, tensor_product, HermitianOperator, Keep, Superoperator};
use crate::thermal::gibbs;

/// How much of `H_A` a protocol is allowed to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianUse {
    /// Never sees `H_A`.
    Blind,
    /// Uses `H_A` only as a local term of the collision Hamiltonian.
    LocalTermsOnly,
    /// The dynamics is tuned to `H_A` itself.
    Dynamical,
}

/// What a protocol is handed when it builds the evolution for one grid cell.
#[derive(Debug, Clone, Copy)]
pub struct ProtocolInput<'a> {
    pub dim_a: usize,
    /// `None` for [`HamiltonianUse::Blind`] protocols.
    pub h_a: Option<&'a HermitianOperator>,
    pub h_b: &'a HermitianOperator,
    pub beta_b: f64,
}

impl ProtocolInput<'_> {
    fn require_h_a(&self) -> Result<&HermitianOperator> {
        self.h_a
            .ok_or_else(|| Error::Precondition("protocol needs H_A but was given none".into()))
    }
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Evolution {
    /// A bombarded by fresh copies of B; B acts as a reservoir.
    Collision(CollisionSetup),
    /// A channel on `A ⊗ B` applied once per step.
    Channel(Superoperator),
}

pub trait Protocol: Debug + Send + Sync {
    fn name(&self) -> &str;
    fn hamiltonian_use(&self) -> HamiltonianUse;
    fn build(&self, input: &ProtocolInput<'_>) -> Result<Evolution>;
}

fn same_dims(input: &ProtocolInput<'_>) -> Result<usize> {
    if input.dim_a != input.h_b.dim() {
        return Err(Error::DimensionMismatch {
            expected: input.dim_a,
            actual: input.h_b.dim(),
        });
    }
    Ok(input.dim_a)
}

/// Partial-swap collisions with `H_S = H_A`, `H_anc = H_B`, `H_SA = J · SWAP`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialSwapCollision {
    pub j: f64,
    pub dt: f64,
}

impl Default for PartialSwapCollision {
    fn default() -> Self {
        Self { j: 1.0, dt: 0.3 }
    }
}

impl Protocol for PartialSwapCollision {
    fn name(&self) -> &str {
        "partial-swap"
    }

    fn hamiltonian_use(&self) -> HamiltonianUse {
        HamiltonianUse::LocalTermsOnly
    }

    fn build(&self, input: &ProtocolInput<'_>) -> Result<Evolution> {
        let d = same_dims(input)?;
        let h_sa = HermitianOperator::new(swap_operator(d).scale(self.j))?;
        let setup = CollisionSetup::new(
            input.require_h_a()?.clone(),
            input.h_b.clone(),
            h_sa,
            input.beta_b,
            self.dt,
        )?;
        Ok(Evolution::Collision(setup))
    }
}

/// Partial swap with no system term: the collision never looks at `H_A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BareSwap {
    pub j: f64,
    pub dt: f64,
}

impl Default for BareSwap {
    fn default() -> Self {
        Self { j: 1.0, dt: 0.3 }
    }
}

impl Protocol for BareSwap {
    fn name(&self) -> &str {
        "bare-swap"
    }

    fn hamiltonian_use(&self) -> HamiltonianUse {
        HamiltonianUse::Blind
    }

    fn build(&self, input: &ProtocolInput<'_>) -> Result<Evolution> {
        let d = same_dims(input)?;
        let h_sa = HermitianOperator::new(swap_operator(d).scale(self.j))?;
        let setup = CollisionSetup::new(
            HermitianOperator::zero(d),
            input.h_b.clone(),
            h_sa,
            input.beta_b,
            self.dt,
        )?;
        Ok(Evolution::Collision(setup))
    }
}

/// Full swap per collision: A's state is replaced by `ρ_B(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Replacer;

impl Protocol for Replacer {
    fn name(&self) -> &str {
        "replacer"
    }

    fn hamiltonian_use(&self) -> HamiltonianUse {
        HamiltonianUse::Blind
    }

    fn build(&self, input: &ProtocolInput<'_>) -> Result<Evolution> {
        let d = same_dims(input)?;
        // Cancel the ancilla's own term so the collision is an exact swap.
        let h_sa = swap_operator(d) - tensor_product(&identity(d), input.h_b.matrix());
        let setup = CollisionSetup::new(
            HermitianOperator::zero(d),
            input.h_b.clone(),
            HermitianOperator::new(h_sa)?,
            input.beta_b,
            FRAC_PI_2,
        )?;
        Ok(Evolution::Collision(setup))
    }
}

/// Rethermalises A towards `gibbs(H_A, β_B)` at rate `γ` per step and leaves B
/// alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunedReservoir {
    pub rate: f64,
}

impl Default for TunedReservoir {
    fn default() -> Self {
        Self { rate: 0.5 }
    }
}

impl Protocol for TunedReservoir {
    fn name(&self) -> &str {
        "tuned-reservoir"
    }

    fn hamiltonian_use(&self) -> HamiltonianUse {
        HamiltonianUse::Dynamical
    }

    fn build(&self, input: &ProtocolInput<'_>) -> Result<Evolution> {
        if !(self.rate > 0.0 && self.rate <= 1.0) {
            return Err(Error::param("rate", format!("must lie in (0, 1], got {}", self.rate)));
        }
        let h_a = input.require_h_a()?;
        let target = gibbs(h_a, input.beta_b).into_matrix();
        let (da, db) = (h_a.dim(), input.h_b.dim());
        let g = self.rate;
        let channel = Superoperator::from_action(da * db, |x| {
            let rest = partial_trace(x, (da, db), Keep::Right).expect("dimensions fixed above");
            x.scale(1.0 - g) + tensor_product(&target, &rest).scale(g)
        });
        Ok(Evolution::Channel(channel))
    }
}

/// The bundled protocols, in a fixed order.
pub fn bundled_protocols() -> Vec<Box<dyn Protocol>> {
    vec![
        Box::new(Replacer),
        Box::new(BareSwap::default()),
        Box::new(PartialSwapCollision::default()),
        Box::new(TunedReservoir::default()),
    ]
}
