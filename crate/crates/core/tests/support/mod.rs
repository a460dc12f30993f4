#[allow(dead_code)]
pub mod oracle;
#[allow(dead_code)]
pub mod transcripts;
