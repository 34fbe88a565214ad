use crate::error::Result;
use crate::matrix::{thin_svd, Mat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreSide {
    /// One score per row: squared row norms of the left singular basis.
    Row,
    /// One score per column: squared row norms of the right singular basis.
    Column,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeverageScores {
    pub scores: Vec<f64>,
    pub side: ScoreSide,
}

impl LeverageScores {
    /// Sum of the scores, equal to the numerical rank of the scored matrix.
    pub fn total(&self) -> f64 {
        self.scores.iter().sum()
    }
}

pub fn leverage_scores(a: &Mat, side: ScoreSide) -> Result<LeverageScores> {
    let f = thin_svd(a)?;
    let basis = match side {
        ScoreSide::Row => f.u,
        ScoreSide::Column => f.v,
    };
    let scores = basis.row_iter().map(|r| r.norm_squared().min(1.0)).collect();
    Ok(LeverageScores { scores, side })
}
