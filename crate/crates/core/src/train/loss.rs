use crate::error::{Error, Result};

/// Mean squared error over indices `>= skip`.
pub fn mse_loss(pred: &[f64], reference: &[f64], skip: usize) -> Result<f64> {
    if pred.len() != reference.len() {
        return Err(Error::Shape(format!("{} predictions for {} references", pred.len(), reference.len())));
    }
    if pred.len() <= skip {
        return Err(Error::EmptyLoss { len: pred.len(), skip });
    }
    let sum: f64 = pred[skip..].iter().zip(&reference[skip..]).map(|(p, r)| (p - r) * (p - r)).sum();
    Ok(sum / (pred.len() - skip) as f64)
}
