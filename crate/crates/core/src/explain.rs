//! Attribute contributions and textual explanations.
//!
//! The contribution matrix is the gradient of one class score with respect to
//! the attribute embeddings, `W = ∂c[k] / ∂E_a` (`N_a × D_e`). Attribute `i`
//! scores `s_i = Σ_j W_ij`, and the explanation names the highest-scoring
//! attributes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EatModel;
use crate::scalar::Scalar;
use crate::tape::Tape;
use crate::tensor::Tensor;

/// Which score the contributions are taken with respect to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EarTarget {
    /// The fused logits `c`.
    #[default]
    Fused,
    /// The integrated logits `c_i` alone. Differs from `Fused` only by the
    /// factor `η`.
    Integrated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContributionVector {
    pub target_class: usize,
    /// `∂score / ∂E_a`, one row per attribute.
    pub w: Tensor<f64>,
    /// Row sums of `w`.
    pub s: Vec<f64>,
}

/// Row sums of a `rows × cols` row-major matrix.
pub fn row_sums(w: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    (0..rows).map(|i| w[i * cols..(i + 1) * cols].iter().sum()).collect()
}

/// Contribution of every attribute to the score of `target_class`.
pub fn ear_scores<F: Scalar>(
    model: &EatModel<F>,
    x: &Tensor<F>,
    target_class: usize,
    target: EarTarget,
) -> Result<ContributionVector> {
    let cfg = model.config();
    if !cfg.attributes_enabled() {
        return Err(Error::InvalidArgument(
            "attribute contributions need a model with attribute heads".into(),
        ));
    }
    if target_class >= cfg.n_classes {
        return Err(Error::InvalidArgument(format!(
            "class {target_class} out of range for {} classes",
            cfg.n_classes
        )));
    }
    let mut fwd = model.forward(Tape::new(), x)?;
    let logits = match target {
        EarTarget::Fused => fwd.c,
        EarTarget::Integrated => fwd.c_i.expect("attribute model has c_i"),
    };
    let score = fwd.tape.index(logits, target_class)?;
    fwd.tape.backward(score)?;
    let e_a = fwd.e_a.expect("attribute model has E_a");
    let (rows, cols) = (cfg.n_attributes, cfg.d_e);
    let w: Vec<f64> = match fwd.tape.grad(e_a) {
        Some(g) => g.data().iter().map(|v| v.as_f64()).collect(),
        None => vec![0.0; rows * cols],
    };
    let s = row_sums(&w, rows, cols);
    Ok(ContributionVector {
        target_class,
        w: Tensor::new([rows, cols], w)?,
        s,
    })
}

/// Indices of the `k` largest scores, largest first. Ties go to the lower
/// index. NaN sorts above every number, so it is never hidden.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeReason {
    pub attribute_index: usize,
    pub attribute_name: String,
    pub score: f64,
    /// Predicted probability that the attribute is present.
    pub predicted_presence: f64,
    /// Grad-CAM overlay for this attribute, relative to the explanation file.
    pub map_file: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub image_id: String,
    pub predicted_class: usize,
    pub predicted_class_name: String,
    pub true_class: Option<usize>,
    pub top_attributes: Vec<AttributeReason>,
    pub class_map_file: Option<String>,
    pub sentence: String,
}

/// "Classified as <class> because: <a>, <b>, <c>."
pub fn sentence(class_name: &str, reasons: &[AttributeReason]) -> String {
    let names: Vec<&str> = reasons.iter().map(|r| r.attribute_name.as_str()).collect();
    format!("Classified as {class_name} because: {}.", names.join(", "))
}

/// Builds the explanation of the predicted class without map files.
pub fn explain<F: Scalar>(
    model: &EatModel<F>,
    x: &Tensor<F>,
    image_id: &str,
    class_names: &[String],
    attribute_names: &[String],
    k: usize,
) -> Result<Explanation> {
    let cfg = model.config();
    if class_names.len() != cfg.n_classes || attribute_names.len() != cfg.n_attributes {
        return Err(Error::InvalidArgument(format!(
            "model has {} classes and {} attributes, names given for {} and {}",
            cfg.n_classes,
            cfg.n_attributes,
            class_names.len(),
            attribute_names.len()
        )));
    }
    let (pred, probs, _) = model.predict(x)?;
    let contrib = ear_scores(model, x, pred, EarTarget::Fused)?;
    let top_attributes: Vec<AttributeReason> = top_k(&contrib.s, k)
        .into_iter()
        .map(|i| AttributeReason {
            attribute_index: i,
            attribute_name: attribute_names[i].clone(),
            score: contrib.s[i],
            predicted_presence: probs[i] as f64,
            map_file: None,
        })
        .collect();
    Ok(Explanation {
        image_id: image_id.to_string(),
        predicted_class: pred,
        predicted_class_name: class_names[pred].clone(),
        true_class: None,
        sentence: sentence(&class_names[pred], &top_attributes),
        top_attributes,
        class_map_file: None,
    })
}


#[cfg(test)]
mod props {
    use proptest::prelude::*;

    use super::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn top_k_dominates_the_rest(scores in prop::collection::vec(-5i32..5, 0..30), k in 0usize..8) {
            let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
            let top = top_k(&scores, k);
            prop_assert_eq!(top.len(), k.min(scores.len()));
            for w in top.windows(2) {
                prop_assert!(scores[w[0]] > scores[w[1]] || (scores[w[0]] == scores[w[1]] && w[0] < w[1]));
            }
            if let Some(&last) = top.last() {
                for i in (0..scores.len()).filter(|i| !top.contains(i)) {
                    prop_assert!(scores[i] < scores[last] || (scores[i] == scores[last] && i > last));
                }
            }
        }

        #[test]
        fn row_sums_add_up_to_total(w in prop::collection::vec(-1.0..1.0f64, 1..60), cols in 1usize..6) {
            let rows = w.len() / cols;
            prop_assume!(rows > 0);
            let w = &w[..rows * cols];
            let s = row_sums(w, rows, cols);
            prop_assert_eq!(s.len(), rows);
            let total: f64 = w.iter().sum();
            prop_assert!((s.iter().sum::<f64>() - total).abs() < 1e-9);
        }
    }
}
