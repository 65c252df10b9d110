/** Controlled coding vocabulary shipped with the workbench.
 *
 * Mirrors the toolkit's reference tables: which action units each electrode
 * channel covers, and the typical AU patterns per emotion category.
 */

export const AUS_BY_CHANNEL: Record<string, string[]> = {
  c1: ["AU1", "AU2"],
  c2: ["AU4"],
  c3: ["AU5", "AU6", "AU7", "AU4", "AU41", "AU42", "AU43", "AU44", "AU45"],
  c4: ["AU9", "AU10"],
  c5: ["AU11", "AU12"],
  c6: ["AU15", "AU16", "AU17", "AU18", "AU22", "AU23", "AU24", "AU28"],
  c7: ["AU14", "AU25"],
};

export const EMOTIONS = [
  "happiness",
  "sadness",
  "disgust",
  "anger",
  "fear",
  "surprise",
  "other",
] as const;

export const AU_VOCABULARY: string[] = Array.from(
  new Set(Object.values(AUS_BY_CHANNEL).flat()),
).sort((a, b) => parseInt(a.slice(2), 10) - parseInt(b.slice(2), 10));

/** AUs the selected channel is most likely to pick up, listed first. */
export function ausForChannel(channelId: string): string[] {
  const primary = AUS_BY_CHANNEL[channelId] ?? [];
  const rest = AU_VOCABULARY.filter((au) => !primary.includes(au));
  return [...primary, ...rest];
}
