use serde::{Deserialize, Serialize};

use super::answer::{lcs_similarity, modal_answers, vqa_accuracy};
use super::iou;
use crate::error::{Error, Result};
use crate::harness::QuestionId;
use crate::imagecore::BBox;

/// One question with its annotations and (optionally) a model prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QARecord {
    pub question_id: QuestionId,
    #[serde(default)]
    pub image_id: Option<String>,
    #[serde(default)]
    pub question: String,
    pub human_answers: Vec<String>,
    #[serde(default)]
    pub model_answer: Option<String>,
    #[serde(default)]
    pub human_box: Option<BBox>,
    #[serde(default)]
    pub predicted_box: Option<BBox>,
}

/// Reference string for str-simi.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrSimiReference {
    /// Most frequent human answer (first seen on ties).
    #[default]
    Modal,
    /// Best similarity over all annotators.
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub question_id: QuestionId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub str_simi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iou: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Percentages over evaluated rows.
    pub mean_acc: f64,
    pub mean_str_simi: f64,
    /// Over rows carrying both boxes; absent when none do.
    pub mean_iou: Option<f64>,
    pub evaluated: usize,
    pub excluded: usize,
    pub rows: Vec<EvalRow>,
}

fn score_row(rec: &QARecord, reference: StrSimiReference) -> Result<(f64, f64)> {
    let answer = rec
        .model_answer
        .as_deref()
        .ok_or_else(|| Error::invalid("missing model answer"))?;
    let acc = vqa_accuracy(answer, &rec.human_answers)?;
    let simi = match reference {
        StrSimiReference::Modal => {
            let modal = modal_answers(&rec.human_answers);
            lcs_similarity(answer, modal.first().map_or("", String::as_str))
        }
        StrSimiReference::Max => rec
            .human_answers
            .iter()
            .map(|h| lcs_similarity(answer, h))
            .fold(0.0, f64::max),
    };
    Ok((acc, simi))
}

/// Scores every record; rows that cannot be scored carry an error and are
/// left out of the means.
pub fn evaluate_dataset(records: &[QARecord], reference: StrSimiReference) -> Result<MetricsReport> {
    if records.is_empty() {
        return Err(Error::invalid("no records to evaluate"));
    }
    let mut rows: Vec<EvalRow> = records
        .iter()
        .map(|rec| {
            let iou = rec.human_box.zip(rec.predicted_box).map(|(h, p)| iou(&h, &p));
            match score_row(rec, reference) {
                Ok((acc, simi)) => EvalRow {
                    question_id: rec.question_id.clone(),
                    acc: Some(acc),
                    str_simi: Some(simi),
                    iou,
                    error: None,
                },
                Err(e) => EvalRow {
                    question_id: rec.question_id.clone(),
                    acc: None,
                    str_simi: None,
                    iou,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| a.question_id.cmp(&b.question_id));

    let scored: Vec<&EvalRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    if scored.is_empty() {
        return Err(Error::invalid("no record could be evaluated"));
    }
    let pct_mean = |vals: Vec<f64>| vals.iter().sum::<f64>() / vals.len() as f64 * 100.0;
    let mean_acc = pct_mean(scored.iter().filter_map(|r| r.acc).collect());
    let mean_str_simi = pct_mean(scored.iter().filter_map(|r| r.str_simi).collect());
    let ious: Vec<f64> = scored.iter().filter_map(|r| r.iou).collect();
    let mean_iou = (!ious.is_empty()).then(|| pct_mean(ious));
    let evaluated = scored.len();
    Ok(MetricsReport { mean_acc, mean_str_simi, mean_iou, evaluated, excluded: rows.len() - evaluated, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: u64, answer: Option<&str>, humans: &[(&str, usize)]) -> QARecord {
        QARecord {
            question_id: QuestionId::from(id),
            image_id: None,
            question: "q".into(),
            human_answers: humans
                .iter()
                .flat_map(|(a, n)| std::iter::repeat_n(a.to_string(), *n))
                .collect(),
            model_answer: answer.map(String::from),
            human_box: None,
            predicted_box: None,
        }
    }

    #[test]
    fn perfect_single_record() {
        let mut r = record(1, Some("cat"), &[("cat", 10)]);
        let b = BBox::new(1, 1, 9, 9).unwrap();
        r.human_box = Some(b);
        r.predicted_box = Some(b);
        let rep = evaluate_dataset(&[r], StrSimiReference::Modal).unwrap();
        assert_eq!(rep.mean_acc, 100.0);
        assert_eq!(rep.mean_str_simi, 100.0);
        assert_eq!(rep.mean_iou, Some(100.0));
    }

    #[test]
    fn mean_of_two() {
        let a = record(1, Some("yes"), &[("yes", 3), ("no", 7)]);
        let b = record(2, Some("yes"), &[("yes", 1), ("no", 9)]);
        let rep = evaluate_dataset(&[a, b], StrSimiReference::Modal).unwrap();
        assert!((rep.mean_acc - 60.0).abs() < 1e-9);
        assert_eq!(rep.mean_iou, None);
    }

    #[test]
    fn missing_answers_excluded() {
        let a = record(1, Some("yes"), &[("yes", 10)]);
        let b = record(2, None, &[("no", 10)]);
        let c = record(3, Some("no"), &[("no", 9)]);
        let rep = evaluate_dataset(&[a, b, c], StrSimiReference::Modal).unwrap();
        assert_eq!((rep.evaluated, rep.excluded), (1, 2));
        assert_eq!(rep.mean_acc, 100.0);
        assert!(rep.rows[1].error.as_deref().unwrap().contains("missing model answer"));
        assert!(evaluate_dataset(&[record(4, None, &[("x", 10)])], StrSimiReference::Modal).is_err());
    }

    #[test]
    fn empty_rejected() {
        assert!(matches!(evaluate_dataset(&[], StrSimiReference::Modal), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn str_simi_reference_choice() {
        let r = record(1, Some("nyc"), &[("new york", 6), ("nyc", 4)]);
        let modal = evaluate_dataset(std::slice::from_ref(&r), StrSimiReference::Modal).unwrap();
        let max = evaluate_dataset(&[r], StrSimiReference::Max).unwrap();
        assert!(modal.mean_str_simi < 100.0);
        assert_eq!(max.mean_str_simi, 100.0);
    }
}
