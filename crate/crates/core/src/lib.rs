pub mod groebner;
pub mod dsl;
pub mod ideals;
pub mod ledger;
pub mod paperdata;
pub mod patch;
pub mod poly;
pub mod rings;
pub mod zla;
