pub mod league;
pub mod oracle;
pub mod primaries;
