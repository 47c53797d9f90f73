/// Index pairs `(i, j)` of one longest common subsequence of `a` and `b`,
/// increasing in both coordinates. Ties prefer matching earlier in `a`.
pub fn lcs_pairs<T: PartialEq>(a: &[T], b: &[T]) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    // suffix[i][j] = LCS length of a[i..] and b[j..]
    let mut suffix = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            suffix[i][j] = if a[i] == b[j] { suffix[i + 1][j + 1] + 1 } else { suffix[i + 1][j].max(suffix[i][j + 1]) };
        }
    }
    let mut pairs = Vec::with_capacity(suffix[0][0]);
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i] == b[j] {
            pairs.push((i, j));
            i += 1;
            j += 1;
        } else if suffix[i + 1][j] >= suffix[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    pairs
}
