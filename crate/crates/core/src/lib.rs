pub mod corpus;
pub mod lexicon;
pub mod par;
pub mod text;
pub mod index;
pub mod evidence;
pub mod remote;
pub mod rank;
pub mod summarize;
pub mod config;
pub mod pipeline;
pub mod evaluate;
