pub mod entropic;
pub mod group;
pub mod harness;
pub mod mixingstats;
pub mod numeric;
pub mod spectral;
pub mod typdist;
pub mod walklaw;
