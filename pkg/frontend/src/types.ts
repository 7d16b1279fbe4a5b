/** Payload shapes of the annotation service API. */

export type AspectCode = 'a' | 'i' | 'o' | 'p' | 'm' | 'd' | 's';

export const ASPECT_NAMES: Record<AspectCode, string> = {
  a: 'Aims',
  i: 'Intervention',
  o: 'Outcomes',
  p: 'Participants',
  m: 'Medicine',
  d: 'Duration',
  s: 'Side Effects',
};

export interface SummaryPayload {
  summary: string | null;
  citations: number[] | null;
}

export interface InstanceDetail {
  instance_id: string;
  pmid: string;
  aspect: AspectCode;
  sentences: string[];
  reference: SummaryPayload;
  output: SummaryPayload | null;
  ref_subclaims: string[] | null;
  gen_subclaims: string[] | null;
  assigned_to_me?: boolean;
}

export interface ArticleDetail {
  pmid: string;
  sentences: string[];
  instances: InstanceDetail[];
}

export interface TaskEntry {
  instance_id: string;
  rated: boolean;
}

export type RatingMetric = 'completeness' | 'conciseness' | 'traceability';

export const RATING_METRICS: RatingMetric[] = ['completeness', 'conciseness', 'traceability'];

export type Ratings = Record<RatingMetric, number>;

export interface RevisionQueueEntry extends InstanceDetail {
  ratings: Array<{ annotator_id: string } & Ratings>;
  revised: boolean;
}

export interface JudgmentItem {
  premise: string;
  hypothesis: string;
  verdict: boolean;
}

/** Rubric text shown as tooltips on the star controls, star level 5..1. */
export const RATING_RUBRIC: Record<RatingMetric, string[]> = {
  completeness: [
    'All key relevant information from the article is accurately captured.',
    'Most key relevant information is present, with minor omissions.',
    'Some key relevant information is present, but some is missing.',
    'Most key relevant information is missing.',
    'All key relevant information is missing.',
  ],
  conciseness: [
    'All content is relevant to this aspect.',
    'Most content is relevant, with minor irrelevant parts.',
    'Some content is relevant, while some is irrelevant.',
    'Most content is irrelevant to this aspect.',
    'All content is irrelevant to this aspect or contains errors.',
  ],
  traceability: [
    'All relevant sentences have been accurately traced.',
    'Most relevant sentences have been accurately traced.',
    'Some relevant sentences are traced, but some are missing or irrelevant.',
    'Most relevant sentences have not been accurately traced.',
    'None of the relevant sentences have been accurately traced.',
  ],
};
