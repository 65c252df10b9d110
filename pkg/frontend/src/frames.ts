/** Video frame readout for the timeline cursor.
 *
 * The workbench shows frame numbers instead of decoding video; the nominal
 * frames-per-second mapping matches how recordings and footage were aligned.
 */

export const DEFAULT_VIDEO_FPS = 30;

export function msToFrame(ms: number, fps: number = DEFAULT_VIDEO_FPS): number {
  return Math.round((ms * fps) / 1000);
}

export function frameToMs(frame: number, fps: number = DEFAULT_VIDEO_FPS): number {
  return (frame * 1000) / fps;
}
