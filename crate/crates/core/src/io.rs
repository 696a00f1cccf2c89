//! Text formats: edge lists, `.content`/`.cites` citation datasets,
//! embedding CSV and partition CSV.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::dataset::{LabeledDataset, LoadStats};
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphBuilder};
use crate::matrix::DenseMatrix;
use crate::partition::Partition;

/// Graph whose dense ids map back to the names found in the input.
#[derive(Debug, Clone)]
pub struct NamedGraph {
    pub graph: Graph,
    pub names: Vec<String>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

#[derive(Default)]
struct NameTable {
    ids: HashMap<String, usize>,
    names: Vec<String>,
}

impl NameTable {
    fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len();
        self.ids.insert(name.to_owned(), id);
        self.names.push(name.to_owned());
        id
    }
}

/// Reads whitespace-separated `u v [weight]` lines. Node names get dense ids
/// in order of first appearance. When `weighted` is false any columns after
/// the second are ignored and every edge has weight 1.
pub fn load_edge_list(path: impl AsRef<Path>, weighted: bool) -> Result<NamedGraph> {
    let path = path.as_ref();
    parse_edge_list(&read(path)?, weighted, path)
}

pub fn parse_edge_list(text: &str, weighted: bool, origin: &Path) -> Result<NamedGraph> {
    let mut table = NameTable::default();
    let mut edges = Vec::new();
    for (line_no, line) in content_lines(text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 {
            return Err(Error::parse(origin, line_no, "expected two node ids"));
        }
        let weight = if weighted {
            match fields.len() {
                2 => 1.0,
                3 => fields[2].parse::<f64>().map_err(|_| {
                    Error::parse(origin, line_no, format!("bad weight {:?}", fields[2]))
                })?,
                _ => return Err(Error::parse(origin, line_no, "expected `u v [weight]`")),
            }
        } else {
            1.0
        };
        if !weight.is_finite() {
            return Err(Error::parse(origin, line_no, format!("weight {weight} is not finite")));
        }
        if weight < 0.0 {
            return Err(Error::validation(format!(
                "{}:{line_no}: negative edge weight {weight}",
                origin.display()
            )));
        }
        let u = table.intern(fields[0]);
        let v = table.intern(fields[1]);
        edges.push((u, v, weight));
    }
    let graph = Graph::from_edges(table.names.len(), &edges)?;
    Ok(NamedGraph {
        graph,
        names: table.names,
    })
}

/// Writes `u v weight` lines, one per undirected edge. Isolated nodes are
/// not representable and are dropped.
pub fn write_edge_list<W: Write>(graph: &Graph, names: &[String], mut out: W) -> std::io::Result<()> {
    for (u, v, w) in graph.edges() {
        writeln!(out, "{} {} {}", names[u], names[v], w)?;
    }
    Ok(())
}

/// Loads a citation network in the Cora/Citeseer layout.
///
/// Content rows are `id <ws> f_1 ... f_d <ws> class`; cites rows are
/// `cited <ws> citing`. Citations are symmetrized and duplicates summed;
/// citations naming unknown ids are dropped and counted. Class ids follow the
/// lexicographic order of class names.
pub fn load_citation_dataset(
    content_path: impl AsRef<Path>,
    cites_path: impl AsRef<Path>,
) -> Result<LabeledDataset> {
    let content_path = content_path.as_ref();
    let cites_path = cites_path.as_ref();
    let content = read(content_path)?;
    let cites = read(cites_path)?;
    parse_citation_dataset(&content, content_path, &cites, cites_path)
}

pub fn parse_citation_dataset(
    content: &str,
    content_origin: &Path,
    cites: &str,
    cites_origin: &Path,
) -> Result<LabeledDataset> {
    let mut names = NameTable::default();
    let mut features = Vec::new();
    let mut class_of_row: Vec<String> = Vec::new();
    let mut dim = None;
    for (line_no, line) in content_lines(content) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(Error::parse(
                content_origin,
                line_no,
                "expected `id features... class`",
            ));
        }
        let row_dim = fields.len() - 2;
        match dim {
            None => dim = Some(row_dim),
            Some(d) if d != row_dim => {
                return Err(Error::validation(format!(
                    "{}:{line_no}: {row_dim} features, earlier rows have {d}",
                    content_origin.display()
                )))
            }
            Some(_) => {}
        }
        if names.ids.contains_key(fields[0]) {
            return Err(Error::validation(format!(
                "{}:{line_no}: duplicate node id {:?}",
                content_origin.display(),
                fields[0]
            )));
        }
        names.intern(fields[0]);
        for cell in &fields[1..fields.len() - 1] {
            let x: f64 = cell.parse().map_err(|_| {
                Error::parse(content_origin, line_no, format!("bad feature value {cell:?}"))
            })?;
            if !x.is_finite() {
                return Err(Error::validation(format!(
                    "{}:{line_no}: non-finite feature value",
                    content_origin.display()
                )));
            }
            features.push(x);
        }
        class_of_row.push(fields[fields.len() - 1].to_owned());
    }
    let Some(dim) = dim else {
        return Err(Error::validation(format!(
            "{} contains no nodes",
            content_origin.display()
        )));
    };
    let n = names.names.len();
    let class_names: Vec<String> = class_of_row
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let class_ids: HashMap<&str, usize> = class_names
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let labels: Vec<usize> = class_of_row.iter().map(|c| class_ids[c.as_str()]).collect();

    let mut stats = LoadStats::default();
    let mut builder = GraphBuilder::new(n);
    for (line_no, line) in content_lines(cites) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(cites_origin, line_no, "expected `cited citing`"));
        }
        stats.citation_records += 1;
        match (names.ids.get(fields[0]), names.ids.get(fields[1])) {
            (Some(&u), Some(&v)) => {
                if u == v {
                    stats.self_citations += 1;
                }
                builder.add_edge(u, v, 1.0)?;
            }
            _ => stats.dropped_citations += 1,
        }
    }
    if stats.dropped_citations > 0 {
        log::warn!(
            "{}: dropped {} citations referencing unknown ids",
            cites_origin.display(),
            stats.dropped_citations
        );
    }
    let graph = builder.build();
    stats.unique_edges = graph.edge_count();
    let mut dataset = LabeledDataset::new(
        graph,
        DenseMatrix::from_vec(n, dim, features)?,
        labels,
        class_names,
        names.names,
    )?;
    dataset.stats = stats;
    Ok(dataset)
}

/// Reads comma-separated embedding rows in dense node order, no header.
pub fn load_embeddings(path: impl AsRef<Path>, expected_rows: usize) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(file, expected_rows, path)
}

pub fn parse_embeddings<R: std::io::Read>(
    input: R,
    expected_rows: usize,
    origin: &Path,
) -> Result<EmbeddingMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(origin, line, e.to_string())
        })?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::validation(format!(
                    "{}:{line}: {} columns, expected {c}",
                    origin.display(),
                    record.len()
                )))
            }
            Some(_) => {}
        }
        for (col, cell) in record.iter().enumerate() {
            let x: f64 = cell.parse().map_err(|_| {
                Error::parse(origin, line, format!("column {}: not a number: {cell:?}", col + 1))
            })?;
            data.push(x);
        }
        rows += 1;
    }
    let Some(cols) = cols else {
        return Err(Error::validation(format!("{} is empty", origin.display())));
    };
    if rows != expected_rows {
        return Err(Error::validation(format!(
            "{} has {rows} rows, expected {expected_rows}",
            origin.display()
        )));
    }
    EmbeddingMatrix::new(DenseMatrix::from_vec(rows, cols, data)?)
}

pub fn write_embeddings<W: Write>(embeddings: &EmbeddingMatrix, mut out: W) -> std::io::Result<()> {
    for i in 0..embeddings.rows() {
        let row: Vec<String> = embeddings.row(i).iter().map(f64::to_string).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub const PARTITION_HEADER: &str = "node_name,community_id";

pub fn write_partition<W: Write>(partition: &Partition, names: &[String], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{PARTITION_HEADER}")?;
    for (node, name) in names.iter().enumerate() {
        writeln!(out, "{name},{}", partition.community_of(node))?;
    }
    Ok(())
}

/// Reads a `node_name,community_id` file against the given name table. Every
/// node must appear exactly once; community ids are renumbered densely.
pub fn load_partition(path: impl AsRef<Path>, names: &[String]) -> Result<Partition> {
    let path = path.as_ref();
    parse_partition(&read(path)?, names, path)
}

pub fn parse_partition(text: &str, names: &[String], origin: &Path) -> Result<Partition> {
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut labels: Vec<Option<usize>> = vec![None; names.len()];
    for (line_no, line) in content_lines(text) {
        if line == PARTITION_HEADER {
            continue;
        }
        let Some((name, community)) = line.rsplit_once(',') else {
            return Err(Error::parse(origin, line_no, "expected `node_name,community_id`"));
        };
        let community: usize = community.trim().parse().map_err(|_| {
            Error::parse(origin, line_no, format!("bad community id {community:?}"))
        })?;
        let Some(&node) = index.get(name.trim()) else {
            return Err(Error::parse(origin, line_no, format!("unknown node {name:?}")));
        };
        if labels[node].replace(community).is_some() {
            return Err(Error::parse(origin, line_no, format!("node {name:?} assigned twice")));
        }
    }
    let labels: Vec<usize> = labels
        .into_iter()
        .enumerate()
        .map(|(node, l)| {
            l.ok_or_else(|| Error::validation(format!("node {:?} has no community", names[node])))
        })
        .collect::<Result<_>>()?;
    Ok(Partition::from_labels(&labels))
}
