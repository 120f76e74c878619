// Response shapes of the JSON endpoints the dashboard consumes.
// The dashboard never computes scores: these values are displayed as-is.

export interface ChallengeSummary {
  spec: {
    id: string;
    title: string;
    target_variable: string;
    areas: string[];
    reference_timezone: string;
    deadline_local_time: string;
    windows: number[];
    metrics: { name: string; params?: Record<string, number> }[];
    [key: string]: unknown;
  };
  upcoming: Record<string, { delivery_date: string; gate_closure: string }>;
}

export interface ChallengesResponse {
  challenges: ChallengeSummary[];
}

export interface LeaderboardRow {
  participant: string;
  display_name: string;
  metrics: Record<string, number>;
  coverage: number;
  rank: number | "UNRANKED";
  data_regime: string;
  has_method_info: boolean;
  forecasts_public: boolean;
}

export interface LeaderboardResponse {
  challenge: string;
  area: string;
  window: number;
  as_of: string;
  delivery_dates: string[];
  metrics: string[];
  rows: LeaderboardRow[];
}

export interface SeriesResponse {
  challenge: string;
  area: string;
  timestamps: string[];
  ground_truth: (number | null)[];
  forecasts: Record<string, (number | null)[]>;
  excluded_participants: string[];
}

export interface Me {
  id: string;
  display_name: string;
  method_description: string | null;
  repo_or_service_link: string | null;
  data_regime: string;
  forecasts_public: boolean;
}

export interface ApiKeyInfo {
  key_id: string;
  created_at: string;
  revoked_at: string | null;
}

export interface Diagnostic {
  code: string;
  path: string;
  message: string;
}
