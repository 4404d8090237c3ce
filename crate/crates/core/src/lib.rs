pub mod barriers;
pub mod corpus;
pub mod obstacles;
pub mod reference_control;
pub mod safety_filter;
pub mod scenario;
pub mod sim_engine;
pub mod trajectory_csv;
pub mod validate;
pub mod vehicle_models;
