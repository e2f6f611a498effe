pub mod anosov;
pub mod exact;
pub mod io;
pub mod iteration;
pub mod jump;
pub mod morse;
pub mod normal_forms;
