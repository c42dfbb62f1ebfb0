// Minimal ambient types for the yargs surface this package uses.
// @types/yargs would normally provide these.
declare module "yargs" {
  export interface Argv {
    option(name: string, spec: Record<string, unknown>): Argv;
    command(
      cmd: string,
      description: string,
      builder: (y: Argv) => Argv,
      handler: (args: Record<string, unknown>) => void | Promise<void>
    ): Argv;
    scriptName(name: string): Argv;
    strict(): Argv;
    exitProcess(enable: boolean): Argv;
    fail(fn: (msg: string, err: Error | undefined) => void): Argv;
    demandCommand(min: number, msg?: string): Argv;
    help(): Argv;
    parseAsync(): Promise<Record<string, unknown>>;
  }
  function yargs(argv: string[]): Argv;
  export default yargs;
}

declare module "yargs/helpers" {
  export function hideBin(argv: string[]): string[];
}
