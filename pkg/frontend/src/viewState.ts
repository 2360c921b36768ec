/**
 * Client-side view state: the latest server snapshot plus pure UI
 * selections. All privacy math lives on the server; this store only holds
 * what came back from the API and what the user picked in controls.
 */

import {
  EPSILON_PRESETS,
  EpsilonPreset,
  InstallResponse,
  QueryResponse,
  StateSnapshot,
} from "./types.js";

export interface UiSelections {
  activeApp: string | null;
  category: string;
  k: number;
  epsilonPreset: EpsilonPreset;
  /** raw epsilon readouts stay hidden unless the expert toggle is on */
  expertMode: boolean;
}

export interface ViewState {
  snapshot: StateSnapshot | null;
  lastQuery: QueryResponse | null;
  pendingInstall: InstallResponse | null;
  selections: UiSelections;
  toast: string | null;
}

export function initialViewState(): ViewState {
  return {
    snapshot: null,
    lastQuery: null,
    pendingInstall: null,
    selections: {
      activeApp: null,
      category: "restaurant",
      k: 5,
      epsilonPreset: "medium",
      expertMode: false,
    },
    toast: null,
  };
}

export function applySnapshot(state: ViewState, snapshot: StateSnapshot): ViewState {
  const activeApp =
    state.selections.activeApp && snapshot.apps.includes(state.selections.activeApp)
      ? state.selections.activeApp
      : snapshot.apps[0] ?? null;
  return {
    ...state,
    snapshot,
    selections: { ...state.selections, activeApp },
  };
}

export function applyQuery(state: ViewState, query: QueryResponse): ViewState {
  return { ...state, lastQuery: query };
}

export function setPreset(state: ViewState, preset: EpsilonPreset): ViewState {
  if (!EPSILON_PRESETS.includes(preset)) {
    return state;
  }
  return { ...state, selections: { ...state.selections, epsilonPreset: preset } };
}

export function setToast(state: ViewState, toast: string | null): ViewState {
  return { ...state, toast };
}
