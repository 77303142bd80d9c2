pub mod condition;
pub mod decimal;
pub mod diagnostics;
pub mod jobs;
pub mod model;
pub mod quality;
pub mod registry;
pub mod sim;
pub mod storyboard;
pub mod xml;
