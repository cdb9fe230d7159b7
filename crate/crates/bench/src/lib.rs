//! Fixed inputs shared by the benchmarks.

use lokilab::collision::CollisionSetup;
use lokilab::contact::ContactScenario;
use lokilab::linalg::pauli_z;
use lokilab::metrology::PairModel;
use lokilab::random::instance_rng;
use lokilab::HermitianOperator;

pub const SEED: u64 = 7;

pub fn collision_setup(ds: usize, da: usize) -> CollisionSetup {
    CollisionSetup::random(&mut instance_rng(SEED, (ds * 16 + da) as u64), ds, da, 0.1).expect("valid setup")
}

pub fn pair_model() -> PairModel {
    PairModel::random_qubits(&mut instance_rng(SEED, 1000), 0.7, 1.1).expect("valid model")
}

pub fn qubit(e: f64) -> HermitianOperator {
    HermitianOperator::new(pauli_z().scale(e)).expect("hermitian")
}

pub fn resonant_scenario() -> ContactScenario {
    ContactScenario::new(qubit(1.0), qubit(1.0))
}
