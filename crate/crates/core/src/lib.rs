pub mod authproto;
pub mod cli;
pub mod codec;
pub mod crypto;
pub mod ledger;
pub mod lightclient;
pub mod selection;
pub mod simnet;
pub mod trustgraph;
