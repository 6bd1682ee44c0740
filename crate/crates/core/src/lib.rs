pub mod analysis;
pub mod decoder;
pub mod deformation;
pub mod experiments;
pub mod lattice;
pub mod noise;
pub mod oracle;
pub mod pauli;
pub mod protocols;
pub mod symplectic;
pub mod tableau;
