/** Interaction-matrix heatmap with token labels on both axes.
 *
 * The color scale is fixed to [-1, 1] (the cosine range) so heatmaps stay
 * comparable across pairs: -1 maps to blue, 0 to white, +1 to red.
 */

export function cellColor(value: number): string {
  const v = Math.max(-1, Math.min(1, value));
  // interpolate blue (-1) -> white (0) -> red (+1)
  const t = Math.abs(v);
  const other = Math.round(255 * (1 - t));
  return v >= 0 ? `rgb(255, ${other}, ${other})` : `rgb(${other}, ${other}, 255)`;
}

export function renderHeatmap(
  doc: Document,
  matrix: number[][],
  leftTokens: string[],
  rightTokens: string[],
): HTMLTableElement {
  const rows = matrix.length;
  const cols = rows > 0 ? matrix[0].length : 0;
  if (leftTokens.length !== rows || rightTokens.length !== cols) {
    throw new Error(
      `heatmap: ${rows}x${cols} matrix vs ${leftTokens.length}/${rightTokens.length} tokens`,
    );
  }
  const table = doc.createElement("table");
  table.className = "heatmap";

  const header = doc.createElement("tr");
  header.appendChild(doc.createElement("th"));
  for (const token of rightTokens) {
    const th = doc.createElement("th");
    th.textContent = token;
    th.scope = "col";
    header.appendChild(th);
  }
  table.appendChild(header);

  matrix.forEach((row, i) => {
    const tr = doc.createElement("tr");
    const th = doc.createElement("th");
    th.textContent = leftTokens[i];
    th.scope = "row";
    tr.appendChild(th);
    row.forEach((value, j) => {
      const td = doc.createElement("td");
      td.className = "heatmap-cell";
      td.style.backgroundColor = cellColor(value);
      td.title = `${leftTokens[i]} x ${rightTokens[j]}: ${value.toFixed(3)}`;
      td.dataset.value = value.toFixed(6);
      tr.appendChild(td);
    });
    table.appendChild(tr);
  });
  return table;
}
