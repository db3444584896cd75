//! Multilingual retrieval-augmented question answering over a document
//! corpus: chunking, exact vector retrieval, language routing to and from
//! English, speech gateways, grounded answering and an evaluation harness.

pub mod conversation;
pub mod corpus;
pub mod eval;
pub mod index;
pub mod lang;
pub mod provider;
pub mod speech;
pub mod text;
