//! Splitting a flat record list into a task stream.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use lvp::{ClassId, LvpError, Record, Result, TaskKind, TaskSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// `N` tasks over the sorted classes, sizes as even as possible.
    Even(usize),
    /// `AxB`: exactly A tasks of B classes each.
    Grid { tasks: usize, per_task: usize },
    /// One domain-incremental task per domain id.
    Domain,
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layout::Even(n) => write!(f, "{n}"),
            Layout::Grid { tasks, per_task } => write!(f, "{tasks}x{per_task}"),
            Layout::Domain => f.write_str("domain"),
        }
    }
}

impl FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        if s == "domain" || s == "domains" {
            return Ok(Layout::Domain);
        }
        let positive = |t: &str| match t.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("'{t}' is not a positive count")),
        };
        if let Some((a, b)) = s.split_once(['x', '×']) {
            return Ok(Layout::Grid {
                tasks: positive(a)?,
                per_task: positive(b)?,
            });
        }
        positive(&s).map(Layout::Even)
    }
}

/// Splits one dataset's records. Task indices start at `first_index`.
pub fn split(records: &[Record], layout: Layout, first_index: usize) -> Result<Vec<TaskSpec>> {
    if records.is_empty() {
        return Err(LvpError::EmptyStream);
    }
    let mut groups: BTreeMap<usize, Vec<Record>> = BTreeMap::new();
    let kind = match layout {
        Layout::Domain => {
            for r in records {
                let d = r.domain_id.ok_or_else(|| {
                    LvpError::InvalidLabelVector(format!(
                        "record of {} has no domain id; the domain layout needs one on every record",
                        r.class
                    ))
                })?;
                groups.entry(d as usize).or_default().push(r.clone());
            }
            TaskKind::Dil
        }
        Layout::Even(_) | Layout::Grid { .. } => {
            let classes: Vec<&ClassId> = records
                .iter()
                .map(|r| &r.class)
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            let k = classes.len();
            let tasks = match layout {
                Layout::Grid { tasks, per_task } => {
                    if tasks * per_task != k {
                        return Err(LvpError::InvalidConfig(format!(
                            "layout {layout} needs {} classes, the data has {k}",
                            tasks * per_task
                        )));
                    }
                    tasks
                }
                Layout::Even(n) => {
                    if n > k {
                        return Err(LvpError::InvalidConfig(format!(
                            "cannot split {k} classes into {n} tasks"
                        )));
                    }
                    n
                }
                Layout::Domain => unreachable!(),
            };
            let task_of: BTreeMap<&ClassId, usize> =
                classes.iter().enumerate().map(|(i, c)| (*c, i * tasks / k)).collect();
            for r in records {
                groups.entry(task_of[&r.class]).or_default().push(r.clone());
            }
            TaskKind::Cil
        }
    };
    Ok(groups
        .into_values()
        .enumerate()
        .map(|(i, recs)| TaskSpec::new(first_index + i, kind, recs))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use lvp::Embedding;

    fn rec(c: u32, d: Option<u32>) -> Record {
        Record::new(Embedding::new(vec![c as f32]).unwrap(), ClassId::new("t", c), d)
    }

    #[test]
    fn parses() {
        assert_eq!("10x10".parse::<Layout>().unwrap(), Layout::Grid { tasks: 10, per_task: 10 });
        assert_eq!("10×10".parse::<Layout>().unwrap(), Layout::Grid { tasks: 10, per_task: 10 });
        assert_eq!("4".parse::<Layout>().unwrap(), Layout::Even(4));
        assert_eq!("domain".parse::<Layout>().unwrap(), Layout::Domain);
        assert!("0".parse::<Layout>().is_err());
        assert!("3x".parse::<Layout>().is_err());
    }

    #[test]
    fn grid_split() {
        let records: Vec<Record> = (0..6).flat_map(|c| [rec(c, None), rec(c, None)]).collect();
        let tasks = split(&records, Layout::Grid { tasks: 3, per_task: 2 }, 1).unwrap();
        assert_eq!(tasks.len(), 3);
        assert_eq!(tasks[1].index, 2);
        assert_eq!(tasks[1].classes().into_iter().map(|c| c.local_id).collect::<Vec<_>>(), vec![2, 3]);
        assert!(split(&records, Layout::Grid { tasks: 4, per_task: 2 }, 1).is_err());
    }

    #[test]
    fn domain_split() {
        let records = vec![rec(0, Some(2)), rec(1, Some(0)), rec(0, Some(0))];
        let tasks = split(&records, Layout::Domain, 1).unwrap();
        assert_eq!(tasks.len(), 2);
        assert_eq!(tasks[0].len(), 2);
        assert_eq!(tasks[0].kind, TaskKind::Dil);
        assert!(split(&[rec(0, None)], Layout::Domain, 1).is_err());
    }
}
