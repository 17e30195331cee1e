pub mod kaon;
pub mod ledger;
pub mod lindblad;
pub mod measure;
pub mod mix;
