/** Wire types of the cubenav HTTP API, as documented by the service. */

export interface MeasureRef {
  agg: string;
  measure: string;
}

export interface AxisJson {
  dim: string;
  hier: string;
  params: string[];
  weak: Record<string, string[]>;
}

export interface RestrictionJson {
  target: string;
  op: string;
  value: unknown;
}

export interface ContextJson {
  id: string;
  fact: string;
  measures: MeasureRef[];
  axes: AxisJson[];
  restrictions: RestrictionJson[];
}

/** One header: [attribute, value] per displayed level, weak values included. */
export type HeaderTuple = [string, string | number][];

export interface CellJson {
  r: number;
  c: number;
  m: number;
  v: number;
}

export interface TableJson {
  rowHeaders: HeaderTuple[];
  colHeaders: HeaderTuple[];
  measures: string[];
  cells: CellJson[];
}

export interface AnnotationJson {
  id: string;
  kind: string;
  content: string;
  author: string;
  createdAt: string;
  parent: string | null;
  anchor: string;
}

export interface RecommendationItemJson {
  context: ContextJson;
  preference: string;
  preferences: string[];
  annotations: AnnotationJson[];
}

export interface RecommendationsJson {
  origin: string;
  items: RecommendationItemJson[];
}

export interface StepResponse {
  context: ContextJson;
  table: TableJson;
  recommendations: RecommendationsJson;
  annotations: AnnotationJson[];
  stepToken: number;
}

export interface OperationJson {
  op: string;
  [param: string]: unknown;
}

export interface PreferenceJson {
  id: string;
  owner: string;
  kind: string;
  order: unknown[];
  context: Record<string, unknown>;
}

export interface SchemaMeasure {
  name: string;
  kind: string;
}

export interface SchemaHierarchy {
  name: string;
  params: string[];
  weak: Record<string, string[]>;
}

export interface SchemaDimension {
  name: string;
  id: string;
  attributes: { name: string; kind: string }[];
  hierarchies: SchemaHierarchy[];
}

export interface SchemaJson {
  facts: { name: string; measures: SchemaMeasure[] }[];
  dimensions: SchemaDimension[];
  star: Record<string, string[]>;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail?: unknown;
}
