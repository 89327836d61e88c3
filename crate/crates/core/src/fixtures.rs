//! The three-heir inheritance example (car, ring, painting, necklace).

use crate::model::{Allocation, Instance};

pub const CAR: usize = 0;
pub const RING: usize = 1;
pub const PAINTING: usize = 2;
pub const NECKLACE: usize = 3;

pub const ALICE: usize = 0;
pub const BOB: usize = 1;
pub const CAROL: usize = 2;

pub fn inheritance() -> Instance {
    Instance::from_integers(&[[10, 9, 4, 6], [10, 6, 9, 4], [10, 4, 6, 9]])
        .expect("static instance is valid")
}

/// Ring to Alice, car and painting to Bob, necklace to Carol.
pub fn inheritance_max_nash() -> Allocation {
    Allocation::from_lists(&[vec![RING], vec![CAR, PAINTING], vec![NECKLACE]], 4)
        .expect("static allocation is valid")
}

/// Ring to Alice, car to Bob, painting and necklace to Carol.
pub fn inheritance_efx() -> Allocation {
    Allocation::from_lists(&[vec![RING], vec![CAR], vec![PAINTING, NECKLACE]], 4)
        .expect("static allocation is valid")
}
