//! Packed approximate homomorphic encryption over `Z_q[X]/(X^N + 1)`.
//!
//! Supports what the registration protocols use: encryption, addition,
//! ciphertext-plaintext products with one rescale, slot rotations and
//! rotate-and-sum dot products. Parameters are demonstration-grade.

pub mod arith;
mod cipher;
mod encoder;
mod keys;
mod ntt;
mod params;
mod poly;
pub mod serial;

pub use cipher::{replicate, Ciphertext, Evaluator, Plaintext};
pub use encoder::Encoder;
pub use keys::{
    gen_galois_key, gen_keyset, gen_public_key, gen_secret_key, GaloisKey, PublicKey, PublicKeySet, SecretKey,
};
pub use params::{HeContext, HeParams};
pub use poly::RnsPoly;
